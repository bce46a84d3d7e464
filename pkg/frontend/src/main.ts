import { ServiceError, fetchSchema, predict } from "./api.js";
import { renderCurve } from "./chart.js";
import { debounce } from "./debounce.js";
import { buildForm } from "./form.js";
import { renderEmptyMatch, renderSummary } from "./summary.js";

export interface AppElements {
  form: HTMLElement;
  chart: HTMLElement;
  summary: HTMLElement;
  banner: HTMLElement;
}

/**
 * Wire the page: schema-driven form, debounced predictions on every change,
 * at most one request in flight, stale responses discarded.
 */
export async function startApp(
  elements: AppElements,
  fetcher: typeof fetch = fetch,
  debounceMs = 300,
): Promise<void> {
  let schema;
  try {
    schema = await fetchSchema(fetcher);
  } catch {
    elements.banner.textContent =
      "Prediction service unreachable. Nothing to show until it is back.";
    elements.banner.classList.add("visible");
    return;
  }

  let sequence = 0;
  let controller: AbortController | null = null;

  const refresh = async () => {
    sequence += 1;
    const mine = sequence;
    controller?.abort();
    controller = new AbortController();
    try {
      const response = await predict(form.toRequest(), controller.signal,
                                     fetcher);
      if (mine !== sequence) return; // a newer form state superseded this
      renderCurve(elements.chart, response.curve.times,
                  response.curve.survival);
      renderSummary(elements.summary, response);
      elements.banner.classList.remove("visible");
    } catch (error) {
      if (mine !== sequence) return;
      if (error instanceof DOMException && error.name === "AbortError") return;
      elements.chart.replaceChildren();
      if (error instanceof ServiceError && error.status === 422) {
        renderEmptyMatch(elements.summary, error.body.diagnostics);
        return;
      }
      elements.summary.replaceChildren();
      elements.banner.textContent =
        error instanceof ServiceError
          ? `Prediction failed: ${error.body.error}`
          : "Prediction service unreachable.";
      elements.banner.classList.add("visible");
    }
  };

  const form = buildForm(elements.form, schema, debounce(refresh, debounceMs));
  await refresh(); // initial global prediction (empty partial input)
}

declare global {
  interface Window {
    __claimdurStarted?: Promise<void>;
  }
}

if (typeof document !== "undefined" && document.getElementById("app-form")) {
  window.__claimdurStarted = startApp({
    form: document.getElementById("app-form")!,
    chart: document.getElementById("app-chart")!,
    summary: document.getElementById("app-summary")!,
    banner: document.getElementById("app-banner")!,
  });
}
