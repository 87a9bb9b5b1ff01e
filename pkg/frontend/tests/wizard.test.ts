import { beforeEach, describe, expect, it } from "vitest";
import { Wizard } from "../src/wizard.js";
import { FixtureServer } from "./helpers.js";

let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "<div id='w'></div>";
  root = document.getElementById("w")!;
});

function wizardServer(role: string): FixtureServer {
  const server = new FixtureServer();
  const steps =
    role === "domain_expert"
      ? ["dataset", "target", "sensitive", "metrics"]
      : ["dataset", "target", "model", "sensitive", "metrics"];
  server.route((req) => {
    if (req.method === "POST" && req.path.endsWith("/sessions")) {
      return {
        session: "wiz",
        version: 0,
        role,
        steps: steps.map((step) => ({
          step,
          done: false,
          fixed: role === "domain_expert" && step === "metrics",
        })),
      };
    }
    return undefined;
  });
  return server;
}

describe("setup wizard", () => {
  it("data scientists see five steps", async () => {
    const server = wizardServer("data_scientist");
    const wizard = new Wizard(root, server.client(), { onReady: () => {} });
    await wizard.start("data_scientist");
    expect(root.querySelectorAll(".wizard-steps li").length).toBe(5);
  });

  it("domain experts see four steps and no model step", async () => {
    const server = wizardServer("domain_expert");
    const wizard = new Wizard(root, server.client(), { onReady: () => {} });
    await wizard.start("domain_expert");
    const items = [...root.querySelectorAll(".wizard-steps li")].map(
      (el) => el.textContent,
    );
    expect(items).toEqual(["dataset", "target", "sensitive", "metrics"]);
    expect(root.querySelector(".wizard-steps li.fixed")!.textContent).toBe("metrics");
  });

  it("metric builder shows an inline caret at the reported parse offset", async () => {
    const server = wizardServer("data_scientist");
    server.route((req) => {
      if (req.method === "POST" && req.path.endsWith("/metrics/custom")) {
        return undefined; // fall through to the error route below
      }
      return undefined;
    });
    const client = server.client();
    // direct 400 with a positioned error, as the engine returns it
    const failingFetch = (async (input: any, init?: any) => {
      const url = String(input);
      if (url.includes("/metrics/custom")) {
        return new Response(
          JSON.stringify({
            code: "validation",
            message: "unexpected end of input, expected one of: )",
            detail: { offset: 10, expected: [")"] },
          }),
          { status: 400, headers: { "content-type": "application/json" } },
        );
      }
      return (client as any).fetchFn
        ? (client as any).fetchFn(input, init)
        : new Response("{}", { status: 200 });
    }) as typeof fetch;

    const { ApiClient } = await import("../src/api.js");
    const api = new ApiClient(failingFetch);
    const wizard = new Wizard(root, api, { onReady: () => {} });
    // drive the builder directly: it only needs a session id
    (wizard as any).sessionId = "wiz";
    (wizard as any).overview = {
      features: [
        { name: "income", kind: "numeric", missing_count: 0 },
        { name: "payment", kind: "numeric", missing_count: 0 },
      ],
    };
    const builder = (wizard as any).customMetricBuilder() as HTMLElement;
    root.appendChild(builder);
    for (const token of ["(", "income", "+", "payment"]) {
      (wizard as any).pushToken(builder, token);
    }
    expect(wizard.expressionText()).toBe("(income + payment");
    (builder.querySelector(".builder-add") as HTMLButtonElement).click();
    await new Promise((r) => setTimeout(r, 0));
    const error = builder.querySelector(".builder-error")!;
    expect(error.classList.contains("error")).toBe(true);
    const lines = error.textContent!.split("\n");
    expect(lines[1]).toBe("(income + payment");
    expect(lines[2]).toBe(" ".repeat(10) + "^");
  });
});
