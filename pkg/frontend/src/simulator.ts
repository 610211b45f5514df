/**
 * Sweep explorer: a form over the simulator endpoint, the vanilla-vs-layered
 * curves, and a CSV download of exactly the bytes the service emitted.
 */
import type { ServiceClient } from "./api.js";
import type { SimRequest, SweepResponse } from "./types.js";
import { renderChart, type Series } from "./chart.js";

export interface SimFormValues {
  num_tasks: number;
  num_layers: number;
  error_prob: number;
  detection_prob: number;
  max_refinements: number;
  seed: number;
  sweepParam: string;
  sweepValues: string;
}

export const DEFAULT_FORM: SimFormValues = {
  num_tasks: 1000,
  num_layers: 5,
  error_prob: 0.2,
  detection_prob: 0.9,
  max_refinements: 2,
  seed: 0,
  sweepParam: "q",
  sweepValues: "0, 0.25, 0.5, 0.75, 1.0",
};

/** Client-side validation: nothing leaves the browser when out of range. */
export function validateForm(values: SimFormValues): string[] {
  const errors: string[] = [];
  if (!(values.error_prob >= 0 && values.error_prob <= 1)) {
    errors.push("error probability must be between 0 and 1");
  }
  if (!(values.detection_prob >= 0 && values.detection_prob <= 1)) {
    errors.push("detection probability must be between 0 and 1");
  }
  if (!(Number.isInteger(values.num_tasks) && values.num_tasks >= 1)) {
    errors.push("number of tasks must be a positive integer");
  }
  if (!(Number.isInteger(values.num_layers) && values.num_layers >= 1)) {
    errors.push("number of layers must be a positive integer");
  }
  if (!(Number.isInteger(values.max_refinements) && values.max_refinements >= 0)) {
    errors.push("refinement budget must be a non-negative integer");
  }
  const sweepValues = parseSweepValues(values.sweepValues);
  if (sweepValues.some((v) => Number.isNaN(v))) {
    errors.push("sweep values must be numbers");
  } else if (["p", "q"].includes(values.sweepParam) && sweepValues.some((v) => v < 0 || v > 1)) {
    errors.push("swept probabilities must be between 0 and 1");
  }
  return errors;
}

export function parseSweepValues(text: string): number[] {
  return text
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0)
    .map(Number);
}

export function buildRequest(values: SimFormValues): SimRequest {
  return {
    num_tasks: values.num_tasks,
    num_layers: values.num_layers,
    error_prob: values.error_prob,
    detection_prob: values.detection_prob,
    max_refinements: values.max_refinements,
    seed: values.seed,
    sweep: { param: values.sweepParam, values: parseSweepValues(values.sweepValues) },
    include_csv: true,
  };
}

export function chartSeries(response: SweepResponse): Series[] {
  return [
    {
      label: "vanilla",
      color: "#3b6fd4",
      points: response.rows.map((row) => ({ x: row.value, y: row.result.vanilla_error_rate })),
    },
    {
      label: "layered",
      color: "#e08a2e",
      points: response.rows.map((row) => ({ x: row.value, y: row.result.layered_error_rate })),
    },
  ];
}

/** The download must be byte-identical to what the service sent. */
export function csvBlob(csv: string): Blob {
  return new Blob([csv], { type: "text/csv" });
}

export class SimExplorer {
  lastResponse: SweepResponse | null = null;
  errors: string[] = [];

  constructor(
    private client: ServiceClient,
    private root: HTMLElement,
  ) {}

  async run(values: SimFormValues): Promise<void> {
    this.errors = validateForm(values);
    if (this.errors.length > 0) {
      this.renderErrors();
      return; // invalid input never reaches the service
    }
    this.lastResponse = await this.client.simulate(buildRequest(values));
    this.renderResult();
  }

  renderErrors(): void {
    const box = this.ensure("div", "validation-errors");
    box.textContent = "";
    for (const message of this.errors) {
      const line = document.createElement("p");
      line.textContent = message;
      box.append(line);
    }
  }

  renderResult(): void {
    this.ensure("div", "validation-errors").textContent = "";
    if (!this.lastResponse) return;
    renderChart(this.ensure("div", "chart"), chartSeries(this.lastResponse));
    const button = this.ensure("button", "download-csv") as HTMLButtonElement;
    button.textContent = "download CSV";
    button.onclick = () => this.download();
  }

  download(): void {
    const csv = this.lastResponse?.csv;
    if (!csv) return;
    const url = URL.createObjectURL(csvBlob(csv));
    const anchor = document.createElement("a");
    anchor.href = url;
    anchor.download = "sweep.csv";
    anchor.click();
    URL.revokeObjectURL(url);
  }

  private ensure(tag: string, className: string): HTMLElement {
    let node = this.root.querySelector<HTMLElement>(`.${className}`);
    if (!node) {
      node = document.createElement(tag);
      node.className = className;
      this.root.append(node);
    }
    return node;
  }
}
