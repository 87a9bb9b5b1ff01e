/** Circular causal-graph canvas.
 *
 * Visual encoding: node size grows with out-degree, edge width with
 * strength; sensitive nodes are gold, unfair nodes red, the target is a
 * distinct double circle. Each node carries a 0..1 rate-range mini-bar and,
 * once group data arrives, a per-value acceptance bar chart. The model tab
 * adds importance as color saturation.
 */
import type { FeatureGroup, GraphEdge, GraphNode, GraphPayload } from "./api.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const SIZE = 840;
const CENTER = SIZE / 2;
const RING_RADIUS = 315;
const MINI_BAR_MAX = 36;

export interface GraphCallbacks {
  onNodeClick?: (feature: string) => void;
  onEdgeClick?: (edge: GraphEdge) => void;
  onContextMenu?: (feature: string, x: number, y: number) => void;
  onDrillChange?: (selection: string[]) => void;
}

interface Placed {
  node: GraphNode;
  x: number;
  y: number;
  radius: number;
}

export class GraphCanvas {
  readonly svg: SVGSVGElement;
  private payload: GraphPayload | null = null;
  private placed = new Map<string, Placed>();
  private drillMode = false;
  private drillSelection = new Set<string>();
  private groupData = new Map<string, FeatureGroup[]>();

  constructor(root: HTMLElement, private readonly callbacks: GraphCallbacks = {}) {
    this.svg = document.createElementNS(SVG_NS, "svg");
    this.svg.setAttribute("viewBox", `0 0 ${SIZE} ${SIZE}`);
    this.svg.classList.add("graph-canvas");
    root.appendChild(this.svg);
  }

  get drillModeActive(): boolean {
    return this.drillMode;
  }

  get selection(): string[] {
    return [...this.drillSelection].sort();
  }

  enterDrillDown(): void {
    this.drillMode = true;
    this.drillSelection.clear();
    this.svg.classList.add("drill-mode");
  }

  exitDrillDown(): void {
    this.drillMode = false;
    this.drillSelection.clear();
    this.svg.classList.remove("drill-mode");
    this.callbacks.onDrillChange?.([]);
  }

  setNodeGroups(feature: string, groups: FeatureGroup[]): void {
    this.groupData.set(feature, groups);
    const item = this.placed.get(feature);
    if (item && this.payload) {
      const holder = this.svg.querySelector(`g.node[data-feature="${cssEscape(feature)}"] g.bars`);
      if (holder) {
        holder.replaceChildren(...this.barRects(item, groups));
      }
    }
  }

  /** Redraw everything from an API payload (full graph or drill-down). */
  render(payload: GraphPayload): void {
    this.payload = payload;
    this.placed.clear();
    this.svg.replaceChildren();

    const nodes = payload.nodes;
    const maxOut = Math.max(1, ...nodes.map((n) => n.out_degree));
    const maxStrength = Math.max(1e-9, ...payload.edges.map((e) => e.strength));
    nodes.forEach((node, i) => {
      const angle = (2 * Math.PI * i) / Math.max(1, nodes.length) - Math.PI / 2;
      this.placed.set(node.feature, {
        node,
        x: CENTER + RING_RADIUS * Math.cos(angle),
        y: CENTER + RING_RADIUS * Math.sin(angle),
        radius: 12 + 16 * (node.out_degree / maxOut),
      });
    });

    const edgeLayer = document.createElementNS(SVG_NS, "g");
    edgeLayer.classList.add("edges");
    for (const edge of payload.edges) {
      const from = this.placed.get(edge.src);
      const to = this.placed.get(edge.dst);
      if (!from || !to) continue;
      edgeLayer.appendChild(this.edgeLine(edge, from, to, maxStrength));
    }
    this.svg.appendChild(edgeLayer);

    const nodeLayer = document.createElementNS(SVG_NS, "g");
    nodeLayer.classList.add("nodes");
    for (const item of this.placed.values()) {
      nodeLayer.appendChild(this.nodeGroup(item));
    }
    this.svg.appendChild(nodeLayer);
  }

  /** Update one node's flags in place (no data reload). */
  patchNode(feature: string, patch: Partial<Pick<GraphNode, "sensitive" | "unfair">>): void {
    const item = this.placed.get(feature);
    if (!item) return;
    Object.assign(item.node, patch);
    const group = this.svg.querySelector(`g.node[data-feature="${cssEscape(feature)}"]`);
    if (group) {
      group.classList.toggle("sensitive", item.node.sensitive);
      group.classList.toggle("unfair", item.node.unfair);
    }
  }

  private edgeLine(edge: GraphEdge, from: Placed, to: Placed, maxStrength: number): SVGElement {
    const group = document.createElementNS(SVG_NS, "g");
    group.classList.add("edge");
    group.setAttribute("data-src", edge.src);
    group.setAttribute("data-dst", edge.dst);
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", fmt(from.x));
    line.setAttribute("y1", fmt(from.y));
    line.setAttribute("x2", fmt(to.x));
    line.setAttribute("y2", fmt(to.y));
    line.setAttribute("stroke-width", fmt(1 + 5 * (edge.strength / maxStrength)));
    line.setAttribute("marker-end", "url(#arrow)");
    group.appendChild(line);
    group.addEventListener("click", () => {
      this.showEdgeStrength(edge, from, to);
      this.callbacks.onEdgeClick?.(edge);
    });
    group.addEventListener("mouseenter", () => this.highlightEdge(edge, true));
    group.addEventListener("mouseleave", () => this.highlightEdge(edge, false));
    return group;
  }

  private showEdgeStrength(edge: GraphEdge, from: Placed, to: Placed): void {
    this.svg.querySelectorAll("text.edge-strength").forEach((t) => t.remove());
    const label = document.createElementNS(SVG_NS, "text");
    label.classList.add("edge-strength");
    label.setAttribute("x", fmt((from.x + to.x) / 2));
    label.setAttribute("y", fmt((from.y + to.y) / 2 - 6));
    label.textContent = edge.strength.toFixed(3);
    this.svg.appendChild(label);
  }

  private nodeGroup(item: Placed): SVGElement {
    const { node } = item;
    const group = document.createElementNS(SVG_NS, "g");
    group.classList.add("node");
    group.setAttribute("data-feature", node.feature);
    group.setAttribute("transform", `translate(${fmt(item.x)}, ${fmt(item.y)})`);
    if (node.sensitive) group.classList.add("sensitive");
    if (node.unfair) group.classList.add("unfair");
    if (node.target) group.classList.add("target");
    if (this.drillSelection.has(node.feature)) group.classList.add("drill-selected");

    if (node.target) {
      const ring = document.createElementNS(SVG_NS, "circle");
      ring.classList.add("target-ring");
      ring.setAttribute("r", fmt(item.radius + 5));
      group.appendChild(ring);
    }
    const circle = document.createElementNS(SVG_NS, "circle");
    circle.classList.add("body");
    circle.setAttribute("r", fmt(item.radius));
    if (node.importance !== undefined) {
      // model tab: importance rendered as color saturation 0..1
      circle.setAttribute("fill", `hsl(210, ${Math.round(node.importance * 100)}%, 62%)`);
    }
    group.appendChild(circle);

    // rate-range mini-bar: length is the 0..1 max-minus-min acceptance gap
    const miniTrack = document.createElementNS(SVG_NS, "rect");
    miniTrack.classList.add("mini-track");
    miniTrack.setAttribute("x", fmt(-MINI_BAR_MAX / 2));
    miniTrack.setAttribute("y", fmt(-item.radius - 12));
    miniTrack.setAttribute("width", fmt(MINI_BAR_MAX));
    miniTrack.setAttribute("height", "4");
    group.appendChild(miniTrack);
    const mini = document.createElementNS(SVG_NS, "rect");
    mini.classList.add("mini-bar");
    mini.setAttribute("x", fmt(-MINI_BAR_MAX / 2));
    mini.setAttribute("y", fmt(-item.radius - 12));
    mini.setAttribute("width", fmt(MINI_BAR_MAX * clamp01(node.spd_range)));
    mini.setAttribute("height", "4");
    group.appendChild(mini);

    const bars = document.createElementNS(SVG_NS, "g");
    bars.classList.add("bars");
    const groups = this.groupData.get(node.feature);
    if (groups) {
      for (const rect of this.barRects(item, groups)) bars.appendChild(rect);
    }
    group.appendChild(bars);

    const label = document.createElementNS(SVG_NS, "text");
    label.classList.add("label");
    label.setAttribute("y", fmt(item.radius + 16));
    label.textContent = node.feature;
    group.appendChild(label);

    group.addEventListener("click", () => {
      if (this.drillMode && !node.target) {
        if (this.drillSelection.has(node.feature)) {
          this.drillSelection.delete(node.feature);
          group.classList.remove("drill-selected");
        } else {
          this.drillSelection.add(node.feature);
          group.classList.add("drill-selected");
        }
        this.callbacks.onDrillChange?.(this.selection);
        return;
      }
      this.callbacks.onNodeClick?.(node.feature);
    });
    group.addEventListener("contextmenu", (event) => {
      event.preventDefault();
      this.callbacks.onContextMenu?.(node.feature, (event as MouseEvent).clientX, (event as MouseEvent).clientY);
    });
    group.addEventListener("mouseenter", () => this.highlightNode(node.feature, true));
    group.addEventListener("mouseleave", () => this.highlightNode(node.feature, false));
    return group;
  }

  /** Acceptance bar chart: one bar per feature value, height = rate. */
  private barRects(item: Placed, groups: FeatureGroup[]): SVGElement[] {
    const defined = groups.filter((g) => g.rate !== null);
    const width = Math.min(5, 30 / Math.max(1, defined.length));
    const out: SVGElement[] = [];
    defined.forEach((g, i) => {
      const height = 16 * (g.rate ?? 0);
      const rect = document.createElementNS(SVG_NS, "rect");
      rect.classList.add("value-bar");
      rect.setAttribute("data-value", g.value);
      rect.setAttribute("x", fmt((i - defined.length / 2) * (width + 1)));
      rect.setAttribute("y", fmt(-height / 2));
      rect.setAttribute("width", fmt(width));
      rect.setAttribute("height", fmt(Math.max(height, 0.5)));
      rect.append(title(`${g.value}: ${(100 * (g.rate ?? 0)).toFixed(1)}% of ${g.count}`));
      out.push(rect);
    });
    return out;
  }

  /** Hover emphasis: connected edges stay, outgoing ones turn blue. */
  private highlightNode(feature: string, on: boolean): void {
    this.svg.querySelectorAll<SVGElement>("g.edge").forEach((edge) => {
      const src = edge.getAttribute("data-src");
      const dst = edge.getAttribute("data-dst");
      const connected = src === feature || dst === feature;
      edge.classList.toggle("dimmed", on && !connected);
      edge.classList.toggle("highlight", on && connected);
      edge.classList.toggle("outgoing", on && src === feature);
    });
  }

  private highlightEdge(edge: GraphEdge, on: boolean): void {
    this.svg
      .querySelectorAll<SVGElement>(
        `g.edge[data-src="${cssEscape(edge.src)}"][data-dst="${cssEscape(edge.dst)}"]`,
      )
      .forEach((el) => el.classList.toggle("highlight", on));
  }
}

function fmt(x: number): string {
  return x.toFixed(2);
}

function clamp01(x: number): number {
  return Math.max(0, Math.min(1, x));
}

function title(text: string): SVGTitleElement {
  const el = document.createElementNS(SVG_NS, "title");
  el.textContent = text;
  return el;
}

function cssEscape(value: string): string {
  return value.replace(/["\\]/g, "\\$&");
}
