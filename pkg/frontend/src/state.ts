/**
 * View state and its URL encoding.
 *
 * The whole view (sensor selection, time range, bucketing, compare mode,
 * display time zone) lives in the query string, so every view is a
 * shareable link and the browser history works as expected. Queries are
 * always made in UTC; the time zone only affects axis labels.
 */

export type Bucket = "hour" | "day";

export interface ViewState {
    sensors: string[];
    from: string;
    to: string;
    bucket: Bucket;
    compare: boolean;
    tz: string;
}

const DAY_MS = 86_400_000;

function isoUtc(ms: number): string {
    return new Date(ms).toISOString().replace(/\.\d{3}Z$/, "Z");
}

export function parseTimestamp(text: string): number | null {
    if (!text) {
        return null;
    }
    const ms = Date.parse(text);
    return Number.isNaN(ms) ? null : ms;
}

/** Human-readable range problem, or null when the range is valid. */
export function rangeProblem(from: string, to: string): string | null {
    const lo = parseTimestamp(from);
    const hi = parseTimestamp(to);
    if (lo === null || hi === null) {
        return "timestamps must be RFC 3339, e.g. 2025-01-06T00:00:00Z";
    }
    if (lo >= hi) {
        return "the start of the range must be before its end";
    }
    if (hi - lo > 370 * DAY_MS) {
        return "the range cannot exceed 370 days";
    }
    return null;
}

/** Last 24 hours in hour buckets, aligned to whole hours. */
export function defaultViewState(nowMs: number = Date.now()): ViewState {
    const end = Math.ceil(nowMs / 3_600_000) * 3_600_000;
    return {
        sensors: [],
        from: isoUtc(end - DAY_MS),
        to: isoUtc(end),
        bucket: "hour",
        compare: false,
        tz: "UTC",
    };
}

export function serializeViewState(state: ViewState): string {
    const params = new URLSearchParams();
    if (state.sensors.length > 0) {
        params.set("sensors", state.sensors.join(","));
    }
    params.set("from", state.from);
    params.set("to", state.to);
    params.set("bucket", state.bucket);
    if (state.compare) {
        params.set("compare", "1");
    }
    if (state.tz !== "UTC") {
        params.set("tz", state.tz);
    }
    return params.toString();
}

export function parseViewState(query: string, nowMs: number = Date.now()): ViewState {
    const params = new URLSearchParams(query);
    const state = defaultViewState(nowMs);
    const sensors = params.get("sensors");
    if (sensors) {
        state.sensors = sensors.split(",").filter((s) => s.length > 0);
    }
    const from = params.get("from");
    const to = params.get("to");
    if (from !== null && to !== null && rangeProblem(from, to) === null) {
        state.from = from;
        state.to = to;
    }
    const bucket = params.get("bucket");
    if (bucket === "hour" || bucket === "day") {
        state.bucket = bucket;
    }
    state.compare = params.get("compare") === "1";
    const tz = params.get("tz");
    if (tz) {
        state.tz = tz;
    }
    return state;
}

/** Quick presets matching the two profile views planners use most. */
export function presetLast24h(state: ViewState, nowMs: number = Date.now()): ViewState {
    const end = Math.ceil(nowMs / 3_600_000) * 3_600_000;
    return { ...state, from: isoUtc(end - DAY_MS), to: isoUtc(end), bucket: "hour" };
}

export function presetLast7d(state: ViewState, nowMs: number = Date.now()): ViewState {
    const end = Math.ceil(nowMs / DAY_MS) * DAY_MS;
    return { ...state, from: isoUtc(end - 7 * DAY_MS), to: isoUtc(end), bucket: "day" };
}
