/**
 * SVG bar charts for the activity profiles, no charting library involved.
 *
 * Every bar carries the API's value verbatim in a data-value attribute and
 * its tooltip; the chart scales bar heights for display but never rounds,
 * sums, or otherwise transforms the numbers it labels.
 */

import type { AggregateBucket } from "./api.js";

export interface Series {
    label: string;
    buckets: AggregateBucket[];
}

export type ValueKey = "total_active_s" | "session_count";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 960;
const HEIGHT = 220;
const MARGIN = { top: 12, right: 12, bottom: 34, left: 56 };
const SERIES_COLORS = ["#2b6cb0", "#dd6b20", "#2f855a", "#805ad5", "#c53030"];

function svgEl<K extends keyof SVGElementTagNameMap>(
    tag: K,
    attrs: Record<string, string>,
): SVGElementTagNameMap[K] {
    const el = document.createElementNS(SVG_NS, tag);
    for (const [key, value] of Object.entries(attrs)) {
        el.setAttribute(key, value);
    }
    return el;
}

function labelFormatter(bucket: "hour" | "day", tz: string): (iso: string) => string {
    const options: Intl.DateTimeFormatOptions =
        bucket === "hour"
            ? { hour: "2-digit", minute: "2-digit", hour12: false, timeZone: tz }
            : { month: "2-digit", day: "2-digit", timeZone: tz };
    const fmt = new Intl.DateTimeFormat("en-GB", options);
    return (iso) => fmt.format(new Date(iso));
}

/**
 * Render one measure (active seconds or session count) for one or more
 * series into `root`. All series must share the same bucket grid, which
 * the API guarantees for identical from/to/bucket parameters.
 */
export function renderProfileChart(
    root: HTMLElement,
    seriesList: Series[],
    valueKey: ValueKey,
    bucket: "hour" | "day",
    tz: string,
): void {
    root.textContent = "";
    if (seriesList.length === 0 || seriesList[0].buckets.length === 0) {
        const empty = document.createElement("p");
        empty.className = "chart-empty";
        empty.textContent = "no data in this range";
        root.appendChild(empty);
        return;
    }

    const grid = seriesList[0].buckets.map((b) => b.bucket_start);
    const maxValue = Math.max(
        1,
        ...seriesList.flatMap((s) => s.buckets.map((b) => b[valueKey])),
    );

    const svg = svgEl("svg", {
        viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
        role: "img",
        class: "profile-chart",
        "data-value-key": valueKey,
    });

    const plotW = WIDTH - MARGIN.left - MARGIN.right;
    const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
    const slot = plotW / grid.length;
    const barW = Math.max(1, (slot * 0.8) / seriesList.length);

    // y axis: zero line, max line, and the max value as its label
    svg.appendChild(svgEl("line", {
        x1: String(MARGIN.left), y1: String(MARGIN.top + plotH),
        x2: String(WIDTH - MARGIN.right), y2: String(MARGIN.top + plotH),
        class: "axis",
    }));
    const yLabel = svgEl("text", {
        x: String(MARGIN.left - 6), y: String(MARGIN.top + 10),
        "text-anchor": "end", class: "axis-label",
    });
    yLabel.textContent = String(maxValue);
    svg.appendChild(yLabel);

    const fmt = labelFormatter(bucket, tz);
    const labelEvery = Math.max(1, Math.ceil(grid.length / 12));

    grid.forEach((iso, i) => {
        if (i % labelEvery === 0) {
            const tick = svgEl("text", {
                x: String(MARGIN.left + slot * (i + 0.5)),
                y: String(HEIGHT - 12),
                "text-anchor": "middle",
                class: "axis-label",
            });
            tick.textContent = fmt(iso);
            svg.appendChild(tick);
        }
    });

    seriesList.forEach((series, si) => {
        const color = SERIES_COLORS[si % SERIES_COLORS.length];
        series.buckets.forEach((b, i) => {
            const value = b[valueKey];
            const h = (value / maxValue) * plotH;
            const bar = svgEl("rect", {
                x: String(MARGIN.left + slot * i + slot * 0.1 + barW * si),
                y: String(MARGIN.top + plotH - h),
                width: String(barW),
                height: String(h),
                fill: color,
                class: "bar",
                "data-series": series.label,
                "data-bucket-start": b.bucket_start,
                "data-value": String(value),
            });
            const tooltip = svgEl("title", {});
            tooltip.textContent = `${series.label} ${b.bucket_start}: ${value}`;
            bar.appendChild(tooltip);
            svg.appendChild(bar);
        });
    });

    root.appendChild(svg);

    const legend = document.createElement("div");
    legend.className = "legend";
    seriesList.forEach((series, si) => {
        const item = document.createElement("span");
        item.className = "legend-item";
        const swatch = document.createElement("span");
        swatch.className = "swatch";
        swatch.style.background = SERIES_COLORS[si % SERIES_COLORS.length];
        item.appendChild(swatch);
        item.appendChild(document.createTextNode(series.label));
        legend.appendChild(item);
    });
    root.appendChild(legend);
}
