/** Side panels: feature details, relationship intersection bars, subgroup
 * combination cards, and the compare-applications scatter + side-by-side. */
import type {
  Card,
  CompareFeature,
  FeatureInfo,
  RelationshipInfo,
  ScatterPayload,
} from "./api.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function formatNumber(value: number | null, digits = 4): string {
  if (value === null) return "undefined";
  return value.toFixed(digits);
}

export class FeatureInfoPanel {
  constructor(
    private readonly root: HTMLElement,
    private readonly callbacks: {
      onBarClick?: (feature: string, value: string) => void;
      onFlagUnfair?: (feature: string, unfair: boolean) => void;
    } = {},
  ) {}

  render(info: FeatureInfo): void {
    this.root.replaceChildren();
    const head = el("div", "panel-head");
    head.appendChild(el("h3", "", info.feature));
    const badges = el("span", "badges");
    if (info.sensitive) badges.appendChild(el("span", "badge gold", "sensitive"));
    if (info.unfair) badges.appendChild(el("span", "badge red", "unfair"));
    head.appendChild(badges);
    const flag = el("button", "flag-unfair", info.unfair ? "clear unfair flag" : "mark unfair");
    flag.addEventListener("click", () => this.callbacks.onFlagUnfair?.(info.feature, !info.unfair));
    head.appendChild(flag);
    this.root.appendChild(head);

    this.root.appendChild(
      el(
        "p",
        "degrees",
        `in-degree ${info.in_degree}, out-degree ${info.out_degree}` +
          (info.missing_count ? `, ${info.missing_count} missing` : ""),
      ),
    );

    const metricList = el("div", "metric-bars");
    for (const metric of info.metrics) {
      const row = el("div", "metric-row");
      row.setAttribute("data-kind", metric.kind);
      row.appendChild(el("span", "metric-name", metric.kind));
      const track = el("div", "metric-track");
      const bar = el("div", "metric-bar");
      if (metric.value !== null) {
        const magnitude = Math.min(1, Math.abs(metric.value));
        bar.style.width = `${Math.round(50 * magnitude)}%`;
        bar.classList.add(metric.value < 0 ? "neg" : "pos");
      } else {
        bar.classList.add("undefined");
      }
      track.appendChild(bar);
      row.appendChild(track);
      const shown = metric.value === null ? (metric.reason ?? "undefined") : metric.value.toFixed(4);
      row.appendChild(el("span", "metric-value", shown));
      metricList.appendChild(row);
    }
    this.root.appendChild(metricList);

    const table = el("table", "group-table");
    const header = el("tr");
    const cols = ["value", "count", "positive", "rate"];
    const modelView = info.view === "model";
    if (modelView) cols.push("confidence");
    for (const c of cols) header.appendChild(el("th", "", c));
    table.appendChild(header);
    for (const group of info.groups) {
      const row = el("tr", "group-row");
      row.setAttribute("data-value", group.value);
      row.appendChild(el("td", "", group.value));
      row.appendChild(el("td", "", String(group.count)));
      row.appendChild(el("td", "", String(group.positive)));
      const rateCell = el("td", "rate-cell", group.rate === null ? "-" : group.rate.toFixed(3));
      row.appendChild(rateCell);
      if (modelView) {
        const confidence = group.mean_confidence ?? null;
        const cell = el("td", "confidence-cell");
        if (confidence !== null) {
          cell.appendChild(pieSlice(confidence));
          cell.appendChild(el("span", "", confidence.toFixed(3)));
        } else {
          cell.textContent = "-";
        }
        row.appendChild(cell);
      }
      row.addEventListener("click", () =>
        this.callbacks.onBarClick?.(info.feature, group.value),
      );
      table.appendChild(row);
    }
    this.root.appendChild(table);
    this.root.appendChild(
      el("p", "overall", `overall acceptance ${info.overall_rate.toFixed(4)}`),
    );
  }
}

/** Confidence drawn as the filled fraction of a small pie. */
export function pieSlice(fraction: number): HTMLElement {
  const holder = el("span", "pie");
  const angle = Math.round(360 * Math.max(0, Math.min(1, fraction)));
  holder.style.background = `conic-gradient(currentColor 0deg ${angle}deg, transparent ${angle}deg 360deg)`;
  holder.setAttribute("data-fraction", fraction.toFixed(4));
  return holder;
}

export class RelationshipPanel {
  constructor(private readonly root: HTMLElement) {}

  render(info: RelationshipInfo): void {
    this.root.replaceChildren();
    this.root.appendChild(el("h3", "", `${info.src} → ${info.dst}`));
    const chart = el("div", "stacked-bars");
    for (const bar of info.bars) {
      const column = el("div", "stacked-column");
      column.setAttribute("data-value", bar.value);
      const stack = el("div", "stack");
      for (const part of bar.parts) {
        const seg = el("div", "segment");
        seg.style.height = `${part.pct}%`;
        seg.setAttribute("data-part", part.value);
        seg.setAttribute("data-pct", part.pct.toFixed(2));
        seg.title = `${part.value}: ${part.pct.toFixed(1)}% (${part.count})`;
        stack.appendChild(seg);
      }
      column.appendChild(stack);
      column.appendChild(el("span", "column-label", `${bar.value} (${bar.total})`));
      chart.appendChild(column);
    }
    this.root.appendChild(chart);
  }
}

export class CombinationsPanel {
  constructor(
    private readonly root: HTMLElement,
    private readonly callbacks: {
      onFlag?: (id: string, unfair: boolean) => void;
      onRemove?: (id: string) => void;
    } = {},
  ) {}

  render(cards: Card[]): void {
    this.root.replaceChildren();
    this.root.appendChild(el("h3", "", "feature combinations"));
    const list = el("div", "cards");
    for (const card of cards) {
      const item = el("div", "card");
      item.setAttribute("data-id", card.id);
      if (card.unfair) item.classList.add("unfair");
      const constraint = card.constraints
        .map((c) => `${c.feature} = ${c.value}`)
        .join(" AND ");
      item.appendChild(el("div", "card-constraints", constraint));
      item.appendChild(
        el(
          "div",
          "card-rate",
          card.rate === null ? "no members" : `${(100 * card.rate).toFixed(1)}% of ${card.count}`,
        ),
      );
      const flag = el("button", "card-flag", card.unfair ? "unflag" : "mark unfair");
      flag.addEventListener("click", () => this.callbacks.onFlag?.(card.id, !card.unfair));
      item.appendChild(flag);
      const remove = el("button", "card-remove", "remove");
      remove.addEventListener("click", () => this.callbacks.onRemove?.(card.id));
      item.appendChild(remove);
      list.appendChild(item);
    }
    this.root.appendChild(list);
  }
}

export class ComparePanel {
  constructor(
    private readonly root: HTMLElement,
    private readonly callbacks: { onPointClick?: (id: number) => void } = {},
  ) {}

  renderScatter(payload: ScatterPayload): void {
    let holder = this.root.querySelector<HTMLElement>(".scatter-holder");
    if (!holder) {
      holder = el("div", "scatter-holder");
      this.root.appendChild(holder);
    }
    holder.replaceChildren();
    const svgNS = "http://www.w3.org/2000/svg";
    const svg = document.createElementNS(svgNS, "svg");
    svg.setAttribute("viewBox", "0 0 420 260");
    svg.classList.add("scatter");
    const minX = Math.min(...payload.points.map((p) => p.x), 0);
    const maxX = Math.max(...payload.points.map((p) => p.x), 1);
    const spanX = maxX - minX || 1;
    for (const point of payload.points) {
      const c = document.createElementNS(svgNS, "circle");
      c.classList.add("point");
      c.setAttribute("data-id", String(point.id));
      c.setAttribute("cx", String(20 + (380 * (point.x - minX)) / spanX));
      // similarity -1..1 mapped top(1) to bottom(-1)
      c.setAttribute("cy", String(20 + 110 * (1 - point.sim)));
      c.setAttribute("r", point.selected ? "6" : "3");
      if (point.selected) c.classList.add("selected");
      if (point.label !== null) c.setAttribute("data-label", point.label);
      c.addEventListener("click", () => this.callbacks.onPointClick?.(point.id));
      svg.appendChild(c);
    }
    holder.appendChild(svg);
  }

  renderComparison(features: CompareFeature[], a: number, b: number): void {
    let holder = this.root.querySelector<HTMLElement>(".comparison-holder");
    if (!holder) {
      holder = el("div", "comparison-holder");
      this.root.appendChild(holder);
    }
    holder.replaceChildren();
    holder.appendChild(el("h4", "", `application ${a} vs ${b} (least similar first)`));
    const table = el("table", "compare-table");
    const head = el("tr");
    for (const c of ["feature", `#${a}`, `#${b}`, "similarity"]) {
      head.appendChild(el("th", "", c));
    }
    table.appendChild(head);
    for (const feature of features) {
      const row = el("tr", "compare-row");
      row.setAttribute("data-feature", feature.name);
      row.appendChild(el("td", "", feature.name));
      row.appendChild(el("td", "", feature.va === null ? "-" : String(feature.va)));
      row.appendChild(el("td", "", feature.vb === null ? "-" : String(feature.vb)));
      const cell = el("td", "score-cell");
      const track = el("div", "score-track");
      const bar = el("div", "score-bar");
      bar.style.width = `${Math.round(100 * feature.score)}%`;
      track.appendChild(bar);
      cell.appendChild(track);
      cell.appendChild(el("span", "", feature.score.toFixed(3)));
      row.appendChild(cell);
      table.appendChild(row);
    }
    holder.appendChild(table);
  }
}
