/** Dataset table: filterable, sortable, paginated; the target column is
 * always visible and color-coded. The model tab adds a confidence pie per
 * row and, for the selected application, signed contribution bars whose
 * color depth encodes criticality. */
import type { ApplicationDetail, DatasetPage, Filter } from "./api.js";
import { pieSlice } from "./panels.js";

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

export interface TableCallbacks {
  onSort?: (feature: string) => void;
  onSelectRow?: (id: number) => void;
  onPageChange?: (page: number) => void;
  onClearFilters?: () => void;
}

export class DatasetTable {
  private positiveLabel: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly callbacks: TableCallbacks = {},
  ) {}

  setPositiveLabel(label: string): void {
    this.positiveLabel = label;
  }

  render(page: DatasetPage, target: string, filters: Filter[]): void {
    this.root.replaceChildren();
    const bar = el("div", "table-toolbar");
    bar.appendChild(
      el("span", "table-count", `${page.total} applications, page ${page.page + 1}`),
    );
    if (filters.length) {
      const chips = el("span", "filter-chips");
      for (const f of filters) {
        chips.appendChild(el("span", "chip", `${f.feature} = ${f.value}`));
      }
      const clear = el("button", "clear-filters", "clear filters");
      clear.addEventListener("click", () => this.callbacks.onClearFilters?.());
      chips.appendChild(clear);
      bar.appendChild(chips);
    }
    const prev = el("button", "page-prev", "prev");
    prev.disabled = page.page === 0;
    prev.addEventListener("click", () => this.callbacks.onPageChange?.(page.page - 1));
    const next = el("button", "page-next", "next");
    next.disabled = (page.page + 1) * page.page_size >= page.total;
    next.addEventListener("click", () => this.callbacks.onPageChange?.(page.page + 1));
    bar.append(prev, next);
    this.root.appendChild(bar);

    const table = el("table", "dataset-table");
    const head = el("tr");
    const columns = ["id", ...page.columns];
    const modelView = page.view === "model";
    if (modelView) columns.push("confidence");
    for (const column of columns) {
      const th = el("th", "", column);
      if (column !== "id" && column !== "confidence") {
        th.classList.add("sortable");
        if (column === target) th.classList.add("target-column");
        th.addEventListener("click", () => this.callbacks.onSort?.(column));
      }
      head.appendChild(th);
    }
    table.appendChild(head);

    for (const row of page.rows) {
      const tr = el("tr", "data-row");
      tr.setAttribute("data-id", String(row.id));
      tr.appendChild(el("td", "row-id", String(row.id)));
      for (const column of page.columns) {
        const value = row.values[column];
        const td = el("td", "", value === null ? "" : String(value));
        if (column === target) {
          td.classList.add("target-cell");
          td.classList.add(
            value !== null && String(value) === this.positiveLabel ? "positive" : "negative",
          );
        }
        tr.appendChild(td);
      }
      if (modelView) {
        const cell = el("td", "confidence-cell");
        const prediction = row.prediction;
        if (prediction && prediction.defined && prediction.confidence !== null) {
          cell.appendChild(pieSlice(prediction.confidence));
          cell.appendChild(el("span", "", `${(100 * prediction.confidence).toFixed(0)}%`));
          if (prediction.label !== null) cell.setAttribute("data-predicted", prediction.label);
        } else {
          cell.textContent = "n/a";
        }
        tr.appendChild(cell);
      }
      tr.addEventListener("click", () => this.callbacks.onSelectRow?.(row.id));
      table.appendChild(tr);
    }
    this.root.appendChild(table);
  }

  /** Contribution bars for the selected application (model tab). */
  renderContributions(detail: ApplicationDetail): void {
    let holder = this.root.querySelector<HTMLElement>(".contributions");
    if (holder) holder.remove();
    holder = el("div", "contributions");
    holder.appendChild(el("h4", "", `application ${detail.id}: feature weights`));
    if (!detail.contributions) {
      holder.appendChild(el("p", "", "no contributions (missing values)"));
      this.root.appendChild(holder);
      return;
    }
    const list = el("div", "contribution-list");
    for (const item of detail.contributions.items) {
      const row = el("div", "contribution-row");
      row.setAttribute("data-feature", item.feature);
      row.appendChild(el("span", "contribution-name", item.feature));
      row.appendChild(
        el("span", "contribution-value", item.value === null ? "-" : String(item.value)),
      );
      const track = el("div", "contribution-track");
      const bar = el("div", `contribution-bar ${item.sign}`);
      bar.style.width = `${Math.round(50 * Math.min(1, Math.abs(item.contribution)))}%`;
      // deeper color = more critical for this application's decision
      bar.style.opacity = String(0.25 + 0.75 * item.depth);
      bar.setAttribute("data-depth", item.depth.toFixed(4));
      if (item.sign === "negative") bar.style.transform = "translateX(-100%)";
      track.appendChild(bar);
      row.appendChild(track);
      row.appendChild(el("span", "contribution-number", item.contribution.toFixed(4)));
      list.appendChild(row);
    }
    holder.appendChild(list);
    this.root.appendChild(holder);
  }
}
