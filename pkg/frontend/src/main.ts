/** Application shell: wizard first, then the six-main-component screen with
 * dataset/model tabs. All cross-component links re-fetch from the API; the
 * client renders numbers verbatim and computes none of them. */
import { ApiClient, Filter, View } from "./api.js";
import { GraphCanvas } from "./graph.js";
import { CombinationsPanel, ComparePanel, FeatureInfoPanel, RelationshipPanel } from "./panels.js";
import { DatasetTable } from "./table.js";
import { Wizard } from "./wizard.js";

export class App {
  readonly api: ApiClient;
  sessionId = "";
  role = "data_scientist";
  view: View = "dataset";
  filters: Filter[] = [];
  sort: string | undefined;
  sortDir: "asc" | "desc" = "asc";
  page = 0;
  drill: string[] = [];
  selected: number | null = null;
  target = "";
  positiveLabel = "";
  modelTrained = false;

  graph!: GraphCanvas;
  featurePanel!: FeatureInfoPanel;
  relationshipPanel!: RelationshipPanel;
  combinationsPanel!: CombinationsPanel;
  comparePanel!: ComparePanel;
  table!: DatasetTable;

  constructor(
    private readonly root: HTMLElement,
    api?: ApiClient,
  ) {
    this.api = api ?? new ApiClient();
  }

  start(): void {
    this.root.replaceChildren();
    const intro = document.createElement("div");
    intro.className = "role-chooser";
    intro.innerHTML = `
      <h2>fairness workbench</h2>
      <p>choose your role to begin the setup wizard</p>`;
    for (const role of ["data_scientist", "domain_expert"]) {
      const button = document.createElement("button");
      button.className = `role-${role}`;
      button.textContent = role.replace("_", " ");
      button.addEventListener("click", async () => {
        const holder = document.createElement("div");
        holder.className = "wizard-holder";
        this.root.replaceChildren(holder);
        const wizard = new Wizard(holder, this.api, {
          onReady: (sid, chosenRole) => {
            this.sessionId = sid;
            this.role = chosenRole;
            void this.showMain();
          },
        });
        await wizard.start(role);
      });
      intro.appendChild(button);
    }
    this.root.appendChild(intro);
  }

  /** Build the main screen skeleton and load every component. */
  async showMain(): Promise<void> {
    this.root.replaceChildren();
    const shell = document.createElement("div");
    shell.className = "main-shell";
    shell.innerHTML = `
      <header class="top-bar">
        <nav class="view-tabs">
          <button class="tab dataset active" data-view="dataset">dataset</button>
          <button class="tab model" data-view="model">model</button>
        </nav>
        <div class="top-actions">
          <button class="train-model">train model</button>
          <button class="drill-toggle">drill-down</button>
          <a class="report-link" target="_blank">report</a>
        </div>
      </header>
      <section class="overview-box" data-component="overview"></section>
      <div class="main-grid">
        <section class="graph-box" data-component="graph"></section>
        <aside class="info-box" data-component="info">
          <div class="feature-info"></div>
          <div class="relationship-info"></div>
        </aside>
        <section class="combinations-box" data-component="combinations"></section>
        <section class="table-box" data-component="dataset"></section>
        <section class="compare-box" data-component="compare"></section>
      </div>`;
    this.root.appendChild(shell);

    (shell.querySelector(".report-link") as HTMLAnchorElement).href =
      this.api.reportUrl(this.sessionId);
    shell.querySelectorAll<HTMLButtonElement>(".view-tabs .tab").forEach((tab) => {
      tab.addEventListener("click", () => void this.switchView(tab.dataset.view as View, shell));
    });
    shell.querySelector(".train-model")?.addEventListener("click", () => void this.trainModel());
    shell.querySelector(".drill-toggle")?.addEventListener("click", () => this.toggleDrill());

    this.graph = new GraphCanvas(shell.querySelector(".graph-box")!, {
      onNodeClick: (feature) => void this.loadFeatureInfo(feature),
      onEdgeClick: (edge) => void this.loadRelationship(edge.src, edge.dst),
      onContextMenu: (feature) => void this.toggleSensitive(feature),
      onDrillChange: (selection) => void this.applyDrill(selection),
    });
    this.featurePanel = new FeatureInfoPanel(shell.querySelector(".feature-info")!, {
      onBarClick: (feature, value) => void this.filterTable(feature, value),
      onFlagUnfair: (feature, unfair) => void this.flagFeature(feature, unfair),
    });
    this.relationshipPanel = new RelationshipPanel(shell.querySelector(".relationship-info")!);
    this.combinationsPanel = new CombinationsPanel(shell.querySelector(".combinations-box")!, {
      onFlag: (id, unfair) => void this.flagSubgroup(id, unfair),
      onRemove: (id) => void this.removeCombination(id),
    });
    this.comparePanel = new ComparePanel(shell.querySelector(".compare-box")!, {
      onPointClick: (id) => void this.compareWith(id),
    });
    this.table = new DatasetTable(shell.querySelector(".table-box")!, {
      onSort: (feature) => void this.sortTable(feature),
      onSelectRow: (id) => void this.selectApplication(id),
      onPageChange: (page) => void this.changePage(page),
      onClearFilters: () => void this.clearFilters(),
    });

    await this.loadOverview();
    await this.loadGraph();
    await this.loadCombinations();
    await this.loadTable();
  }

  async switchView(view: View, shell: HTMLElement): Promise<void> {
    if (view === "model" && !this.modelTrained) return;
    this.view = view;
    shell.querySelectorAll(".view-tabs .tab").forEach((tab) => {
      tab.classList.toggle("active", (tab as HTMLElement).dataset.view === view);
    });
    await this.loadOverview();
    await this.loadGraph();
    await this.loadCombinations();
    await this.loadTable();
    if (this.selected !== null) await this.loadScatter();
  }

  async loadOverview(): Promise<void> {
    const box = this.root.querySelector<HTMLElement>("[data-component=overview]");
    if (!box) return;
    const data = await this.api.overview(this.sessionId, this.view);
    this.target = data.target;
    this.positiveLabel = data.positive_label;
    this.table.setPositiveLabel(data.positive_label);
    box.innerHTML = "";
    const instances = document.createElement("span");
    instances.className = "overview-instances";
    instances.textContent = `${data.instances} instances`;
    const rate = document.createElement("span");
    rate.className = "overview-rate";
    rate.textContent = `${(100 * data.acceptance_rate).toFixed(1)}% ${data.positive_label}`;
    const pie = document.createElement("span");
    pie.className = "overview-pie pie";
    const angle = Math.round(360 * data.acceptance_rate);
    pie.style.background = `conic-gradient(currentColor 0deg ${angle}deg, transparent ${angle}deg 360deg)`;
    pie.setAttribute("data-fraction", data.acceptance_rate.toFixed(4));
    const label = document.createElement("span");
    label.className = "overview-view";
    label.textContent = this.view === "model" ? "model (test data)" : "dataset";
    box.append(label, instances, pie, rate);
  }

  async loadGraph(): Promise<void> {
    const payload = await this.api.graph(
      this.sessionId,
      this.view,
      this.drill.length ? this.drill : undefined,
    );
    this.graph.render(payload);
    // per-node acceptance bars arrive lazily, drawn when each fetch lands
    for (const node of payload.nodes) {
      if (node.target) continue;
      void this.api
        .featureInfo(this.sessionId, node.feature, this.view)
        .then((info) => this.graph.setNodeGroups(node.feature, info.groups))
        .catch(() => undefined);
    }
  }

  async loadFeatureInfo(feature: string): Promise<void> {
    const info = await this.api.featureInfo(this.sessionId, feature, this.view);
    this.featurePanel.render(info);
  }

  async loadRelationship(src: string, dst: string): Promise<void> {
    const info = await this.api.relationship(this.sessionId, src, dst, this.view);
    this.relationshipPanel.render(info);
  }

  async loadCombinations(): Promise<void> {
    const body = await this.api.combinations(this.sessionId, this.view);
    this.combinationsPanel.render(body.cards);
  }

  async loadTable(): Promise<void> {
    const page = await this.api.datasetPage(this.sessionId, this.view, {
      filters: this.filters,
      sort: this.sort,
      dir: this.sortDir,
      page: this.page,
    });
    this.table.render(page, this.target, this.filters);
  }

  /** Bar click in the info panel filters the dataset table. */
  async filterTable(feature: string, value: string): Promise<void> {
    this.filters = this.filters.filter((f) => f.feature !== feature);
    this.filters.push({ feature, value });
    this.page = 0;
    await this.loadTable();
  }

  async clearFilters(): Promise<void> {
    this.filters = [];
    this.page = 0;
    await this.loadTable();
  }

  async sortTable(feature: string): Promise<void> {
    if (this.sort === feature) {
      this.sortDir = this.sortDir === "asc" ? "desc" : "asc";
    } else {
      this.sort = feature;
      this.sortDir = "asc";
    }
    await this.loadTable();
  }

  async changePage(page: number): Promise<void> {
    this.page = Math.max(0, page);
    await this.loadTable();
  }

  /** Selecting an application generates the similarity comparison. */
  async selectApplication(id: number): Promise<void> {
    this.selected = id;
    await this.api.select(this.sessionId, id);
    if (this.view === "model") {
      const detail = await this.api.application(this.sessionId, id, "model");
      this.table.renderContributions(detail);
    }
    await this.loadScatter();
  }

  async loadScatter(): Promise<void> {
    if (this.selected === null) return;
    const payload = await this.api.scatter(this.sessionId, this.selected, this.view);
    this.comparePanel.renderScatter(payload);
  }

  async compareWith(other: number): Promise<void> {
    if (this.selected === null || other === this.selected) return;
    const body = await this.api.compare(this.sessionId, this.selected, other);
    this.comparePanel.renderComparison(body.features, body.a, body.b);
  }

  async toggleSensitive(feature: string): Promise<void> {
    const node = this.root.querySelector(`g.node[data-feature="${feature}"]`);
    const makeSensitive = !(node?.classList.contains("sensitive") ?? false);
    const result = await this.api.toggleSensitive(this.sessionId, feature, makeSensitive);
    this.graph.patchNode(feature, { sensitive: result.sensitive.includes(feature) });
  }

  async flagFeature(feature: string, unfair: boolean): Promise<void> {
    const result = await this.api.flagUnfair(this.sessionId, "feature", feature, unfair);
    this.graph.patchNode(feature, { unfair: result.features.includes(feature) });
    await this.loadFeatureInfo(feature);
  }

  async flagSubgroup(id: string, unfair: boolean): Promise<void> {
    await this.api.flagUnfair(this.sessionId, "subgroup", id, unfair);
    await this.loadCombinations();
  }

  async removeCombination(id: string): Promise<void> {
    await this.api.removeCombination(this.sessionId, id);
    await this.loadCombinations();
  }

  toggleDrill(): void {
    if (this.graph.drillModeActive) {
      this.graph.exitDrillDown();
    } else {
      this.graph.enterDrillDown();
    }
  }

  async applyDrill(selection: string[]): Promise<void> {
    this.drill = selection;
    await this.loadGraph();
  }

  /** Long computations run as jobs; the UI polls rather than blocking. */
  async trainModel(seed = 0): Promise<void> {
    const { job } = await this.api.trainModel(this.sessionId, seed);
    const done = await this.pollJob(job.id);
    if (done.status === "done") {
      this.modelTrained = true;
    }
  }

  async pollJob(jobId: string, intervalMs = 250, timeoutMs = 600_000) {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const { job } = await this.api.jobStatus(jobId);
      if (job.status === "done" || job.status === "error") return job;
      if (Date.now() > deadline) throw new Error(`job ${jobId} timed out`);
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }
}

export function bootstrap(): void {
  const root = document.getElementById("app");
  if (root) new App(root).start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap();
}
