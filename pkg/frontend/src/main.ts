/**
 * Dashboard wiring: sensor picker, time-range filters, profile charts.
 *
 * The view state lives in the URL (shareable, survives reload), queries go
 * to the ingestion API in UTC, and the charts label exactly the numbers the
 * API returned. Without a sensor selection the server-side all-sensor
 * aggregate is shown; compare mode renders one series per selected sensor.
 */

import { ApiClient, BucketResponse, SensorSummary } from "./api.js";
import { renderProfileChart, Series } from "./chart.js";
import {
    ViewState,
    parseViewState,
    presetLast24h,
    presetLast7d,
    rangeProblem,
    serializeViewState,
} from "./state.js";

export interface AppOptions {
    /** Filter-change debounce; tests set 0. */
    debounceMs?: number;
    window?: Window;
}

export interface AppHandle {
    state(): ViewState;
    /** Resolves when the in-flight refresh (if any) has settled. */
    whenIdle(): Promise<void>;
}

const TIME_ZONES = ["UTC", "Europe/Zurich", "America/New_York", "Asia/Tokyo"];

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    attrs: Record<string, string> = {},
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    for (const [key, value] of Object.entries(attrs)) {
        node.setAttribute(key, value);
    }
    if (text !== undefined) {
        node.textContent = text;
    }
    return node;
}

export function initApp(root: HTMLElement, api: ApiClient, opts: AppOptions = {}): AppHandle {
    const win = opts.window ?? window;
    const debounceMs = opts.debounceMs ?? 200;

    let state = parseViewState(win.location.search);
    let sensors: SensorSummary[] = [];
    let refreshTimer: ReturnType<typeof setTimeout> | null = null;
    let pendingRefresh: Promise<void> = Promise.resolve();

    root.textContent = "";
    const banner = el("div", { class: "banner", hidden: "hidden", "data-testid": "banner" });
    const bannerText = el("span");
    const bannerRetry = el("button", { type: "button" }, "retry");
    banner.append(bannerText, bannerRetry);

    const sensorList = el("div", { class: "sensor-list", "data-testid": "sensor-list" });
    const compareLabel = el("label", { class: "compare" });
    const compareBox = el("input", { type: "checkbox", "data-testid": "compare" });
    compareLabel.append(compareBox, document.createTextNode(" compare sensors"));

    const fromInput = el("input", { type: "text", size: "22", "data-testid": "from" });
    const toInput = el("input", { type: "text", size: "22", "data-testid": "to" });
    const bucketSelect = el("select", { "data-testid": "bucket" });
    bucketSelect.append(el("option", { value: "hour" }, "hourly"),
                        el("option", { value: "day" }, "daily"));
    const tzSelect = el("select", { "data-testid": "tz" });
    for (const tz of TIME_ZONES) {
        tzSelect.append(el("option", { value: tz }, tz));
    }
    const preset24h = el("button", { type: "button", "data-testid": "preset-24h" }, "last 24 h");
    const preset7d = el("button", { type: "button", "data-testid": "preset-7d" }, "last 7 days");
    const rangeError = el("p", { class: "range-error", hidden: "hidden",
                                 "data-testid": "range-error" });

    const controls = el("div", { class: "controls" });
    const rangeRow = el("div", { class: "row" });
    rangeRow.append(el("span", {}, "from "), fromInput, el("span", {}, " to "), toInput,
                    preset24h, preset7d, el("span", {}, " buckets "), bucketSelect,
                    el("span", {}, " time zone "), tzSelect);
    controls.append(rangeRow, rangeError);

    const activeChart = el("section", { class: "chart", "data-testid": "chart-active" });
    const activeTitle = el("h2", {}, "activity time (seconds)");
    const activeBody = el("div");
    activeChart.append(activeTitle, activeBody);

    const countChart = el("section", { class: "chart", "data-testid": "chart-count" });
    const countTitle = el("h2", {}, "sessions");
    const countBody = el("div");
    countChart.append(countTitle, countBody);

    root.append(banner, el("h1", {}, "street workout park activity"), sensorList,
                compareLabel, controls, activeChart, countChart);

    function showBanner(message: string, retry: () => void): void {
        bannerText.textContent = message;
        banner.hidden = false;
        bannerRetry.onclick = () => {
            banner.hidden = true;
            retry();
        };
    }

    function syncControls(): void {
        fromInput.value = state.from;
        toInput.value = state.to;
        bucketSelect.value = state.bucket;
        tzSelect.value = TIME_ZONES.includes(state.tz) ? state.tz : "UTC";
        compareBox.checked = state.compare;
        for (const box of sensorList.querySelectorAll("input")) {
            box.checked = state.sensors.includes(box.value);
        }
    }

    function pushUrl(): void {
        win.history.pushState(null, "", "?" + serializeViewState(state));
    }

    function selectedSeries(): { sensor: string | null; label: string }[] {
        if (state.sensors.length === 0) {
            return [{ sensor: null, label: "all sensors" }];
        }
        if (state.compare) {
            return state.sensors.map((s) => ({ sensor: s, label: s }));
        }
        return [{ sensor: state.sensors[0], label: state.sensors[0] }];
    }

    async function refresh(): Promise<void> {
        const problem = rangeProblem(state.from, state.to);
        if (problem !== null) {
            rangeError.textContent = problem;
            rangeError.hidden = false;
            return;
        }
        rangeError.hidden = true;
        try {
            const responses: { label: string; body: BucketResponse }[] = [];
            for (const { sensor, label } of selectedSeries()) {
                const body = sensor === null
                    ? await api.getActivities("", state.from, state.to, state.bucket)
                    : await api.getActivities(sensor, state.from, state.to, state.bucket);
                responses.push({ label, body });
            }
            const series: Series[] = responses.map((r) => ({
                label: r.label,
                buckets: r.body.buckets,
            }));
            renderProfileChart(activeBody, series, "total_active_s", state.bucket, state.tz);
            renderProfileChart(countBody, series, "session_count", state.bucket, state.tz);
        } catch (err) {
            showBanner(String(err instanceof Error ? err.message : err), () => {
                pendingRefresh = refresh();
            });
        }
    }

    function scheduleRefresh(): void {
        if (refreshTimer !== null) {
            clearTimeout(refreshTimer);
        }
        if (debounceMs === 0) {
            pendingRefresh = refresh();
            return;
        }
        refreshTimer = setTimeout(() => {
            refreshTimer = null;
            pendingRefresh = refresh();
        }, debounceMs);
    }

    function update(change: Partial<ViewState>): void {
        state = { ...state, ...change };
        syncControls();
        pushUrl();
        scheduleRefresh();
    }

    function renderSensorList(): void {
        sensorList.textContent = "";
        if (sensors.length === 0) {
            sensorList.append(el("p", { class: "empty" }, "no sensors have reported yet"));
            return;
        }
        for (const sensor of sensors) {
            const label = el("label", { class: "sensor" });
            const box = el("input", { type: "checkbox", value: sensor.sensor_id });
            box.checked = state.sensors.includes(sensor.sensor_id);
            box.addEventListener("change", () => {
                const chosen = state.sensors.filter((s) => s !== sensor.sensor_id);
                if (box.checked) {
                    chosen.push(sensor.sensor_id);
                    chosen.sort();
                }
                update({ sensors: chosen });
            });
            const battery = sensor.last_battery_mv === null
                ? "" : ` · ${sensor.last_battery_mv} mV`;
            label.append(box, document.createTextNode(
                ` ${sensor.sensor_id} (${sensor.event_count} events${battery})`));
            sensorList.append(label);
        }
    }

    async function loadSensors(): Promise<void> {
        try {
            sensors = await api.getSensors();
            renderSensorList();
            syncControls();
        } catch (err) {
            showBanner(String(err instanceof Error ? err.message : err), () => {
                pendingRefresh = loadSensors().then(() => refresh());
            });
        }
    }

    fromInput.addEventListener("change", () => update({ from: fromInput.value.trim() }));
    toInput.addEventListener("change", () => update({ to: toInput.value.trim() }));
    bucketSelect.addEventListener("change", () => {
        update({ bucket: bucketSelect.value === "day" ? "day" : "hour" });
    });
    tzSelect.addEventListener("change", () => update({ tz: tzSelect.value }));
    compareBox.addEventListener("change", () => update({ compare: compareBox.checked }));
    preset24h.addEventListener("click", () => update(presetLast24h(state)));
    preset7d.addEventListener("click", () => update(presetLast7d(state)));

    win.addEventListener("popstate", () => {
        state = parseViewState(win.location.search);
        syncControls();
        scheduleRefresh();
    });

    syncControls();
    pendingRefresh = loadSensors().then(() => refresh());

    return {
        state: () => ({ ...state, sensors: [...state.sensors] }),
        whenIdle: async () => {
            await pendingRefresh;
        },
    };
}

declare global {
    interface Window {
        PARKSENSE_API?: string;
    }
}

/** Browser entry point; tests call initApp directly instead. */
export function start(): void {
    const root = document.getElementById("app");
    if (root !== null) {
        initApp(root, new ApiClient(window.PARKSENSE_API ?? ""));
    }
}
