/**
 * Typed client for the ingestion service's query API.
 *
 * The dashboard is read-only and does no math of its own: everything it
 * shows comes verbatim out of these three endpoints. Concurrent requests
 * for the same URL are deduplicated so a burst of filter changes cannot
 * stack up identical fetches.
 */

export interface SensorSummary {
    sensor_id: string;
    first_seen: string;
    last_seen: string;
    event_count: number;
    last_battery_mv: number | null;
}

export interface AggregateBucket {
    bucket_start: string;
    total_active_s: number;
    session_count: number;
    presence_count: number;
}

export interface BucketResponse {
    bucket: "hour" | "day";
    buckets: AggregateBucket[];
}

export class ApiError extends Error {
    constructor(message: string, readonly status: number | null = null) {
        super(message);
        this.name = "ApiError";
    }
}

export class ApiClient {
    private inflight = new Map<string, Promise<unknown>>();

    /** baseUrl "" means same origin (the service can serve the dashboard). */
    constructor(readonly baseUrl: string = "") {}

    private fetchJson<T>(url: string): Promise<T> {
        const pending = this.inflight.get(url);
        if (pending !== undefined) {
            return pending as Promise<T>;
        }
        const request = (async () => {
            let resp: Response;
            try {
                resp = await fetch(this.baseUrl + url);
            } catch (err) {
                throw new ApiError(`cannot reach the API: ${String(err)}`);
            }
            if (!resp.ok) {
                let detail = resp.statusText;
                try {
                    const body = await resp.json();
                    if (body && typeof body.detail === "string") {
                        detail = body.detail;
                    }
                } catch {
                    /* non-JSON error body; keep the status text */
                }
                throw new ApiError(`API error ${resp.status}: ${detail}`, resp.status);
            }
            return (await resp.json()) as T;
        })();
        this.inflight.set(url, request);
        request.finally(() => this.inflight.delete(url)).catch(() => undefined);
        return request;
    }

    async getSensors(): Promise<SensorSummary[]> {
        const body = await this.fetchJson<{ sensors: SensorSummary[] }>("/v1/sensors");
        return body.sensors;
    }

    activitiesUrl(sensor: string, from: string, to: string, bucket: "hour" | "day"): string {
        const params = new URLSearchParams({ from, to, bucket });
        if (sensor !== "") {
            params.set("sensor", sensor);
        }
        return `/v1/activities?${params.toString()}`;
    }

    getActivities(
        sensor: string,
        from: string,
        to: string,
        bucket: "hour" | "day",
    ): Promise<BucketResponse> {
        return this.fetchJson<BucketResponse>(this.activitiesUrl(sensor, from, to, bucket));
    }
}
