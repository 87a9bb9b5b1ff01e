/** Test harness: an ApiClient whose fetch is served from recorded fixtures,
 * with every request logged for round-trip assertions. */
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { ApiClient } from "../src/api.js";

const here = dirname(fileURLToPath(import.meta.url));

export function fixture<T = any>(name: string): T {
  return JSON.parse(readFileSync(join(here, "fixtures", `${name}.json`), "utf-8"));
}

export interface LoggedRequest {
  method: string;
  path: string;
  params: URLSearchParams;
  body: any;
}

export type Route = (req: LoggedRequest) => unknown | undefined;

export class FixtureServer {
  readonly requests: LoggedRequest[] = [];
  private readonly routes: Route[] = [];

  route(fn: Route): void {
    this.routes.push(fn);
  }

  client(): ApiClient {
    const fetchFn = (async (input: any, init?: any) => {
      const url = new URL(String(input), "http://fixtures.test");
      const req: LoggedRequest = {
        method: init?.method ?? "GET",
        path: url.pathname,
        params: url.searchParams,
        body: init?.body ? JSON.parse(init.body) : undefined,
      };
      this.requests.push(req);
      for (const route of this.routes) {
        const result = route(req);
        if (result !== undefined) {
          return jsonResponse(result);
        }
      }
      return new Response(
        JSON.stringify({ code: "not_found", message: `no fixture for ${req.method} ${req.path}` }),
        { status: 404, headers: { "content-type": "application/json" } },
      );
    }) as typeof fetch;
    return new ApiClient(fetchFn);
  }

  calls(method: string, pathPart: string): LoggedRequest[] {
    return this.requests.filter((r) => r.method === method && r.path.includes(pathPart));
  }
}

function jsonResponse(body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status: 200,
    headers: { "content-type": "application/json" },
  });
}

/** Serve the standard read endpoints for a ready session from fixtures. */
export function standardRoutes(server: FixtureServer, sid = "fix"): void {
  const byView = (req: LoggedRequest, base: string) =>
    req.params.get("view") === "model" ? `${base}_model` : base;
  server.route((req) => {
    if (req.method !== "GET") return undefined;
    if (req.path.endsWith("/overview")) return fixture(byView(req, "overview"));
    if (req.path.endsWith("/graph")) {
      if (req.params.get("drill")) return fixture("graph_drill");
      return fixture(byView(req, "graph"));
    }
    if (req.path.includes("/features/")) return fixture(byView(req, "feature_info"));
    if (req.path.endsWith("/relationship")) return fixture("relationship");
    if (req.path.endsWith("/combinations")) return fixture("combinations");
    if (req.path.endsWith("/dataset")) {
      if (req.params.get("filters")) return fixture("dataset_page_filtered");
      return fixture(byView(req, "dataset_page"));
    }
    if (req.path.includes("/applications/")) return fixture("application_model");
    if (req.path.endsWith("/scatter")) return fixture("scatter");
    if (req.path.endsWith("/compare")) return fixture("compare");
    if (req.path.endsWith("/wizard")) {
      return { session: sid, version: 9, ready: true, steps: [] };
    }
    return undefined;
  });
  server.route((req) => {
    if (req.method === "POST" && req.path.endsWith("/select")) {
      return { session: sid, version: 10, selected: req.body.row };
    }
    return undefined;
  });
}
