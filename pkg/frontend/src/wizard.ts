/** Setup wizard: role-dependent steps (five for data scientists, four for
 * domain experts), dataset loading, target/model/sensitive/metric choices
 * and the custom-metric builder (name field, feature palette with
 * distribution previews, operator work area). */
import { ApiClient, ApiRequestError, Overview, WizardStep } from "./api.js";

const METRIC_DESCRIPTIONS: Record<string, string> = {
  SPD: "Statistical parity difference: gap in positive-outcome rates between unprivileged and privileged groups.",
  DisparateImpact: "Disparate impact: ratio of unprivileged to privileged positive-outcome rates.",
  EqOppDiff: "Equality of opportunity difference: gap in true-positive rates (model view).",
  AvgOddsDiff: "Average odds difference: mean of the TPR and FPR gaps (model view).",
  Theil: "Theil index: inequality of per-application benefits (model view).",
};

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

export interface WizardCallbacks {
  onReady: (sessionId: string, role: string) => void;
}

export class Wizard {
  private sessionId: string | null = null;
  private role = "data_scientist";
  private steps: WizardStep[] = [];
  private overview: Overview | null = null;
  private sensitiveChoice = new Set<string>();
  private metricChoice = new Set<string>(["SPD"]);
  private builderTokens: string[] = [];

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    private readonly callbacks: WizardCallbacks,
  ) {}

  async start(role: string): Promise<void> {
    this.role = role;
    const info = await this.api.createSession(role);
    this.sessionId = info.session;
    this.steps = info.steps ?? [];
    this.renderSteps();
  }

  private async refreshSteps(): Promise<void> {
    const status = await this.api.wizardStatus(this.sessionId!);
    this.steps = status.steps ?? [];
    if (status.ready) {
      this.callbacks.onReady(this.sessionId!, this.role);
      return;
    }
    this.renderSteps();
  }

  private renderSteps(): void {
    this.root.replaceChildren();
    const list = el("ol", "wizard-steps");
    for (const step of this.steps) {
      const item = el("li", step.done ? "done" : "pending", step.step);
      if (step.fixed) {
        item.classList.add("fixed");
        item.title = "fixed for this role";
      }
      list.appendChild(item);
    }
    this.root.appendChild(list);
    const current = this.steps.find((s) => !s.done);
    if (!current) return;
    const panel = el("div", "wizard-panel");
    this.root.appendChild(panel);
    if (current.step === "dataset") this.renderDatasetStep(panel);
    else if (current.step === "target") void this.renderTargetStep(panel);
    else if (current.step === "model") this.renderModelStep(panel);
    else if (current.step === "sensitive") void this.renderSensitiveStep(panel);
    else if (current.step === "metrics") void this.renderMetricsStep(panel);
  }

  private renderDatasetStep(panel: HTMLElement): void {
    panel.appendChild(el("h3", "", "load the dataset"));
    const file = el("input") as HTMLInputElement;
    file.type = "file";
    file.accept = ".csv";
    file.className = "csv-upload";
    file.addEventListener("change", async () => {
      const chosen = file.files?.[0];
      if (!chosen) return;
      const text = await chosen.text();
      await this.submit(() => this.api.setDataset(this.sessionId!, { csv: text }), panel);
    });
    panel.appendChild(file);
    panel.appendChild(el("p", "hint", "or generate a synthetic loan book:"));
    const seed = numberInput("seed", 42);
    const rows = numberInput("rows", 1000);
    const generate = el("button", "generate-synth", "generate");
    generate.addEventListener("click", () =>
      this.submit(
        () =>
          this.api.setDataset(this.sessionId!, {
            synth: { seed: seed.valueAsNumber, rows: rows.valueAsNumber },
          }),
        panel,
      ),
    );
    panel.append(labelled("seed", seed), labelled("rows", rows), generate);
  }

  private async renderTargetStep(panel: HTMLElement): Promise<void> {
    panel.appendChild(el("h3", "", "set the target"));
    panel.appendChild(
      el("p", "hint", "the target is the decision column the model predicts"),
    );
    const features = el("select") as HTMLSelectElement;
    features.className = "target-feature";
    // the dataset step is done, so the session serves dataset reads
    const page = await this.api.datasetPage(this.sessionId!, "dataset", { pageSize: 1 });
    for (const column of page.columns) {
      const option = el("option", "", column) as HTMLOptionElement;
      option.value = column;
      features.appendChild(option);
    }
    const positive = el("input") as HTMLInputElement;
    positive.className = "positive-label";
    positive.placeholder = "positive value, e.g. accepted";
    const apply = el("button", "apply-target", "continue");
    apply.addEventListener("click", () =>
      this.submit(
        () => this.api.setTarget(this.sessionId!, features.value, positive.value),
        panel,
      ),
    );
    panel.append(labelled("target", features), labelled("positive", positive), apply);
  }

  private renderModelStep(panel: HTMLElement): void {
    panel.appendChild(el("h3", "", "select the prediction model"));
    const family = el("select") as HTMLSelectElement;
    family.className = "model-family";
    const option = el("option", "", "logistic (regularized, auditable weights)") as HTMLOptionElement;
    option.value = "logistic";
    family.appendChild(option);
    const apply = el("button", "apply-model", "continue");
    apply.addEventListener("click", () =>
      this.submit(() => this.api.setModel(this.sessionId!, family.value), panel),
    );
    panel.append(labelled("model", family), apply);
  }

  private async renderSensitiveStep(panel: HTMLElement): Promise<void> {
    panel.appendChild(el("h3", "", "mark sensitive features"));
    this.overview = await this.api.overview(this.sessionId!, "dataset").catch(() => null as never);
    const page = await this.api.datasetPage(this.sessionId!, "dataset", { pageSize: 1 });
    const holder = el("div", "sensitive-grid");
    for (const column of page.columns) {
      const label = el("label", "sensitive-option");
      const box = el("input") as HTMLInputElement;
      box.type = "checkbox";
      box.value = column;
      box.addEventListener("change", () => {
        if (box.checked) this.sensitiveChoice.add(column);
        else this.sensitiveChoice.delete(column);
      });
      label.append(box, el("span", "", column));
      holder.appendChild(label);
    }
    panel.appendChild(holder);
    const apply = el("button", "apply-sensitive", "continue");
    apply.addEventListener("click", () => {
      const features: Record<string, null> = {};
      for (const f of this.sensitiveChoice) features[f] = null;
      return this.submit(() => this.api.setSensitive(this.sessionId!, features), panel);
    });
    panel.appendChild(apply);
  }

  private async renderMetricsStep(panel: HTMLElement): Promise<void> {
    panel.appendChild(el("h3", "", "choose fairness metrics"));
    const grid = el("div", "metric-grid");
    for (const [kind, description] of Object.entries(METRIC_DESCRIPTIONS)) {
      const label = el("label", "metric-option");
      const box = el("input") as HTMLInputElement;
      box.type = "checkbox";
      box.value = kind;
      box.checked = this.metricChoice.has(kind);
      box.addEventListener("change", () => {
        if (box.checked) this.metricChoice.add(kind);
        else this.metricChoice.delete(kind);
      });
      label.append(box, el("strong", "", kind), el("p", "metric-desc", description));
      grid.appendChild(label);
    }
    panel.appendChild(grid);
    panel.appendChild(this.customMetricBuilder());
    const apply = el("button", "apply-metrics", "finish setup");
    apply.addEventListener("click", () =>
      this.submit(() => this.api.setMetrics(this.sessionId!, [...this.metricChoice]), panel),
    );
    panel.appendChild(apply);
  }

  /** Fig-7-style builder: name, palette of numeric features with value
   * previews, operator buttons, and the expression assembled as text. */
  private customMetricBuilder(): HTMLElement {
    const holder = el("div", "metric-builder");
    holder.appendChild(el("h4", "", "custom metric"));
    const name = el("input") as HTMLInputElement;
    name.className = "builder-name";
    name.placeholder = "give the metric a name";
    holder.appendChild(labelled("name", name));

    const palette = el("div", "builder-palette");
    const numericFeatures = (this.overview?.features ?? []).filter(
      (f) => f.kind === "numeric",
    );
    for (const feature of numericFeatures) {
      const chip = el("button", "palette-feature", feature.name);
      chip.title = `${feature.name} (numeric${feature.missing_count ? `, ${feature.missing_count} missing` : ""})`;
      chip.addEventListener("click", () => this.pushToken(holder, feature.name));
      palette.appendChild(chip);
    }
    holder.appendChild(palette);

    const operators = el("div", "builder-operators");
    for (const op of ["+", "-", "*", "/", "(", ")"]) {
      const button = el("button", "operator", op);
      button.addEventListener("click", () => this.pushToken(holder, op));
      operators.appendChild(button);
    }
    const undo = el("button", "operator undo", "undo");
    undo.addEventListener("click", () => {
      this.builderTokens.pop();
      this.syncWorkArea(holder);
    });
    operators.appendChild(undo);
    holder.appendChild(operators);

    const work = el("div", "builder-work");
    work.setAttribute("data-role", "work-area");
    holder.appendChild(work);
    const error = el("p", "builder-error");
    error.hidden = true;
    holder.appendChild(error);

    const add = el("button", "builder-add", "add custom metric");
    add.addEventListener("click", async () => {
      error.hidden = true;
      try {
        await this.api.addCustomMetric(this.sessionId!, name.value, this.expressionText());
        this.builderTokens = [];
        this.syncWorkArea(holder);
        name.value = "";
        error.hidden = false;
        error.classList.remove("error");
        error.textContent = "added";
      } catch (err) {
        error.hidden = false;
        error.classList.add("error");
        if (err instanceof ApiRequestError && err.body.detail?.offset !== undefined) {
          const text = this.expressionText();
          const offset = err.body.detail.offset ?? 0;
          // inline caret at the reported byte offset
          error.textContent = `${err.body.message}\n${text}\n${" ".repeat(offset)}^`;
        } else {
          error.textContent = err instanceof Error ? err.message : String(err);
        }
      }
    });
    holder.appendChild(add);
    return holder;
  }

  expressionText(): string {
    return this.builderTokens.join(" ").replace(/\( /g, "(").replace(/ \)/g, ")");
  }

  private pushToken(holder: HTMLElement, token: string): void {
    this.builderTokens.push(token);
    this.syncWorkArea(holder);
  }

  private syncWorkArea(holder: HTMLElement): void {
    const work = holder.querySelector<HTMLElement>("[data-role=work-area]");
    if (work) work.textContent = this.expressionText();
  }

  private async submit(action: () => Promise<unknown>, panel: HTMLElement): Promise<void> {
    const previous = panel.querySelector(".wizard-error");
    previous?.remove();
    try {
      await action();
      await this.refreshSteps();
    } catch (err) {
      const message =
        err instanceof ApiRequestError ? err.body.message : err instanceof Error ? err.message : String(err);
      panel.appendChild(el("p", "wizard-error", message));
    }
  }
}

function numberInput(name: string, value: number): HTMLInputElement {
  const input = document.createElement("input");
  input.type = "number";
  input.name = name;
  input.value = String(value);
  return input;
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  const label = document.createElement("label");
  label.className = "labelled";
  const span = document.createElement("span");
  span.textContent = text;
  label.append(span, control);
  return label;
}
