import type { Method, PredictRequest, SchemaResponse } from "./types.js";

export interface FormState {
  inputs: Record<string, string>;
  method: Method;
}

export interface PredictionForm {
  getState(): FormState;
  toRequest(): PredictRequest;
}

const ANY = "";

/**
 * One selector per variable (all optional), plus the method toggle.
 * The request body carries exactly the variables with a selection.
 */
export function buildForm(
  container: HTMLElement,
  schema: SchemaResponse,
  onChange: () => void,
): PredictionForm {
  const selects = new Map<string, HTMLSelectElement>();
  for (const variable of schema.variables) {
    const row = document.createElement("label");
    row.className = "field";
    const caption = document.createElement("span");
    caption.textContent = variable.name;
    const select = document.createElement("select");
    select.name = variable.name;
    const blank = document.createElement("option");
    blank.value = ANY;
    blank.textContent = "(any)";
    select.appendChild(blank);
    for (const category of variable.categories) {
      const option = document.createElement("option");
      option.value = category;
      option.textContent = category;
      select.appendChild(option);
    }
    select.addEventListener("change", onChange);
    row.appendChild(caption);
    row.appendChild(select);
    container.appendChild(row);
    selects.set(variable.name, select);
  }

  const methodRow = document.createElement("div");
  methodRow.className = "method-toggle";
  const radios: HTMLInputElement[] = [];
  for (const method of ["A", "B"] as const) {
    const label = document.createElement("label");
    const radio = document.createElement("input");
    radio.type = "radio";
    radio.name = "method";
    radio.value = method;
    radio.checked = method === "A";
    radio.addEventListener("change", onChange);
    label.appendChild(radio);
    label.appendChild(document.createTextNode(
      method === "A" ? " Method A (average score)" : " Method B (average curve)",
    ));
    methodRow.appendChild(label);
    radios.push(radio);
  }
  container.appendChild(methodRow);

  const getState = (): FormState => {
    const inputs: Record<string, string> = {};
    for (const [name, select] of selects) {
      if (select.value !== ANY) inputs[name] = select.value;
    }
    const checked = radios.find((r) => r.checked);
    return { inputs, method: (checked?.value ?? "A") as Method };
  };

  return {
    getState,
    toRequest: () => {
      const state = getState();
      return { inputs: state.inputs, method: state.method };
    },
  };
}
