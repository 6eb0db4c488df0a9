import { column, groupStats, readCsv, requireColumns, Table } from "./csv";
import * as svg from "./svg";

export const FIGURE_KINDS = [
  "spectral_trends",
  "training_summary",
  "prediction_overlay",
  "decision_map",
  "spectrum",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

const QNTK_COLOR = "#d62728"; // red, kernel-based predictions
const QNN_COLOR = "#7a3fbf"; // purple, trained model
const TRAIN_COLOR = "#1f77b4";
const TEST_COLOR = "#ff7f0e";
const CLASS_COLORS = ["#d62728", "#1f77b4"];

interface PanelSpec {
  title: string;
  values: (table: Table) => { x: number[]; mean: number[]; std: number[] };
}

function fourPanelFigure(table: Table, specs: PanelSpec[], xLabel: string): string {
  const width = 760;
  const height = 250;
  const panelWidth = 140;
  const panelHeight = 150;
  const body: string[] = [];
  specs.forEach((spec, index) => {
    const stats = spec.values(table);
    const box = { x: 55 + index * (panelWidth + 45), y: 40, width: panelWidth, height: panelHeight };
    const lower = stats.mean.map((m, i) => m - stats.std[i]);
    const upper = stats.mean.map((m, i) => m + stats.std[i]);
    const yDomain = svg.extent([...lower, ...upper]);
    const { parts, sx, sy } = svg.panel(box, svg.extent(stats.x, 0.02), yDomain, spec.title, xLabel);
    body.push(...parts);
    if (stats.x.length > 0) {
      const px = stats.x.map(sx);
      body.push(svg.band(px, lower.map(sy), upper.map(sy), QNTK_COLOR));
      body.push(svg.line(px, stats.mean.map(sy), QNTK_COLOR));
      stats.x.forEach((x, i) => body.push(svg.circle(sx(x), sy(stats.mean[i]), 2.2, QNTK_COLOR)));
    }
  });
  return svg.document(width, height, body);
}

/** Four spectral panels versus depth: lambda_min, 1/lambda_max, 1/kappa, R^2. */
export function renderSpectralTrends(inputs: string[]): string {
  const table = readCsv(inputs[0]);
  requireColumns(table, ["layers", "seed", "lambda_min", "lambda_max", "kappa", "r2_qntk"]);
  const layers = column(table, "layers");
  const stat = (values: number[]) => groupStats(layers, values);
  return fourPanelFigure(
    table,
    [
      { title: "lambda_min", values: (t) => stat(column(t, "lambda_min")) },
      { title: "1 / lambda_max", values: (t) => stat(column(t, "lambda_max").map((v) => 1 / v)) },
      { title: "1 / kappa", values: (t) => stat(column(t, "kappa").map((v) => 1 / v)) },
      { title: "R^2 (kernel fit)", values: (t) => stat(column(t, "r2_qntk")) },
    ],
    "layers"
  );
}

/** Four training panels versus depth: final loss, epochs, AAD, parameter change. */
export function renderTrainingSummary(inputs: string[]): string {
  const table = readCsv(inputs[0]);
  requireColumns(table, ["layers", "seed", "epochs", "final_loss", "rel_param_change", "aad"]);
  const layers = column(table, "layers");
  const stat = (values: number[]) => groupStats(layers, values);
  return fourPanelFigure(
    table,
    [
      { title: "final loss", values: (t) => stat(column(t, "final_loss")) },
      { title: "epochs", values: (t) => stat(column(t, "epochs")) },
      { title: "AAD", values: (t) => stat(column(t, "aad")) },
      { title: "rel. param change", values: (t) => stat(column(t, "rel_param_change")) },
    ],
    "layers"
  );
}

/** Kernel and trained-model prediction curves with one-sigma bands over data points. */
export function renderPredictionOverlay(inputs: string[]): string {
  const predictions = readCsv(inputs[0]);
  requireColumns(predictions, ["x", "qntk_mean", "qntk_std", "qnn_mean", "qnn_std"]);
  const xs = column(predictions, "x");

  const width = 520;
  const height = 360;
  const box = { x: 60, y: 40, width: 420, height: 260 };
  const body: string[] = [];

  const markers: string[] = [];
  let yValues: number[] = [];
  let dataset: Table | null = null;
  if (inputs.length > 1) {
    dataset = readCsv(inputs[1]);
    requireColumns(dataset, ["feature_0", "label_0", "is_train"]);
    yValues = column(dataset, "label_0");
  }

  const qntkMean = column(predictions, "qntk_mean");
  const qntkStd = column(predictions, "qntk_std");
  const qnnMean = column(predictions, "qnn_mean");
  const qnnStd = column(predictions, "qnn_std");
  const lows = [
    ...qntkMean.map((m, i) => m - qntkStd[i]),
    ...qnnMean.map((m, i) => m - qnnStd[i]),
    ...yValues,
  ];
  const highs = [
    ...qntkMean.map((m, i) => m + qntkStd[i]),
    ...qnnMean.map((m, i) => m + qnnStd[i]),
    ...yValues,
  ];
  const xDomain = svg.extent(xs.length ? xs : [0, 1], 0.02);
  const yDomain = svg.extent(lows.length ? [...lows, ...highs] : [0, 1]);
  const { parts, sx, sy } = svg.panel(box, xDomain, yDomain, "predictions", "x");
  body.push(...parts);

  if (xs.length > 0) {
    const px = xs.map(sx);
    body.push(svg.band(px, qntkMean.map((m, i) => sy(m - qntkStd[i])), qntkMean.map((m, i) => sy(m + qntkStd[i])), QNTK_COLOR));
    body.push(svg.band(px, qnnMean.map((m, i) => sy(m - qnnStd[i])), qnnMean.map((m, i) => sy(m + qnnStd[i])), QNN_COLOR));
    body.push(svg.line(px, qntkMean.map(sy), QNTK_COLOR));
    body.push(svg.line(px, qnnMean.map(sy), QNN_COLOR));
  }
  if (dataset) {
    const fx = column(dataset, "feature_0");
    const labels = column(dataset, "label_0");
    const isTrain = column(dataset, "is_train");
    fx.forEach((x, i) => {
      if (isTrain[i] === 1) {
        markers.push(svg.circle(sx(x), sy(labels[i]), 3.4, TRAIN_COLOR));
      } else {
        markers.push(svg.triangle(sx(x), sy(labels[i]), 3.6, TEST_COLOR));
      }
    });
  }
  body.push(...markers);
  body.push(svg.text(box.x + 10, 20, "kernel prediction", 10, "start"));
  body.push(`<line x1="${box.x + 110}" y1="16" x2="${box.x + 140}" y2="16" stroke="${QNTK_COLOR}" stroke-width="2"/>`);
  body.push(svg.text(box.x + 160, 20, "trained model", 10, "start"));
  body.push(`<line x1="${box.x + 250}" y1="16" x2="${box.x + 280}" y2="16" stroke="${QNN_COLOR}" stroke-width="2"/>`);
  return svg.document(width, height, body);
}

/** Class map over the evaluation grid with train (circle) / test (triangle) markers. */
export function renderDecisionMap(inputs: string[]): string {
  const predictions = readCsv(inputs[0]);
  requireColumns(predictions, ["x_0", "x_1", "qnn_mean_0", "qnn_mean_1"]);
  const gx = column(predictions, "x_0");
  const gy = column(predictions, "x_1");
  const class0 = column(predictions, "qnn_mean_0");
  const class1 = column(predictions, "qnn_mean_1");

  const width = 440;
  const height = 420;
  const box = { x: 60, y: 40, width: 320, height: 320 };
  const body: string[] = [];
  const xDomain = svg.extent(gx.length ? gx : [0, 1], 0.02);
  const yDomain = svg.extent(gy.length ? gy : [0, 1], 0.02);
  const { parts, sx, sy } = svg.panel(box, xDomain, yDomain, "decision map", "x_0");
  body.push(...parts);

  const uniqueX = [...new Set(gx)].sort((a, b) => a - b);
  const uniqueY = [...new Set(gy)].sort((a, b) => a - b);
  const cellW = uniqueX.length > 1 ? Math.abs(sx(uniqueX[1]) - sx(uniqueX[0])) : 8;
  const cellH = uniqueY.length > 1 ? Math.abs(sy(uniqueY[1]) - sy(uniqueY[0])) : 8;
  gx.forEach((x, i) => {
    const winner = class0[i] >= class1[i] ? 0 : 1;
    const confidence = Math.min(1, Math.abs(class0[i] - class1[i]));
    body.push(
      svg.rect(
        sx(x) - cellW / 2,
        sy(gy[i]) - cellH / 2,
        cellW,
        cellH,
        CLASS_COLORS[winner],
        0.15 + 0.5 * confidence
      )
    );
  });

  if (inputs.length > 1) {
    const dataset = readCsv(inputs[1]);
    requireColumns(dataset, ["feature_0", "feature_1", "label_0", "label_1", "is_train"]);
    const fx = column(dataset, "feature_0");
    const fy = column(dataset, "feature_1");
    const label0 = column(dataset, "label_0");
    const isTrain = column(dataset, "is_train");
    fx.forEach((x, i) => {
      const color = CLASS_COLORS[label0[i] >= 0 ? 0 : 1];
      if (isTrain[i] === 1) {
        body.push(svg.circle(sx(x), sy(fy[i]), 4, color));
      } else {
        body.push(svg.triangle(sx(x), sy(fy[i]), 4.2, color));
      }
    });
  }
  return svg.document(width, height, body);
}

/** Stem plot of ensemble-averaged coefficient magnitudes per signed frequency. */
export function renderSpectrum(inputs: string[]): string {
  const table = readCsv(inputs[0]);
  requireColumns(table, ["omega", "mean_abs_coeff"]);
  const omega = column(table, "omega");
  const coeff = column(table, "mean_abs_coeff");

  const width = 520;
  const height = 320;
  const box = { x: 60, y: 40, width: 420, height: 220 };
  const body: string[] = [];
  const xDomain = svg.extent(omega.length ? omega : [0, 1], 0.02);
  const yDomain: [number, number] = [0, Math.max(...coeff, 1e-12) * 1.1];
  const { parts, sx, sy } = svg.panel(box, xDomain, yDomain, "Fourier coefficients", "frequency");
  body.push(...parts);
  omega.forEach((w, i) => {
    const px = sx(w);
    body.push(`<line x1="${px}" y1="${sy(0)}" x2="${px}" y2="${sy(coeff[i])}" stroke="${TRAIN_COLOR}" stroke-width="2"/>`);
    body.push(svg.circle(px, sy(coeff[i]), 2, TRAIN_COLOR));
  });
  return svg.document(width, height, body);
}

export function render(kind: FigureKind, inputs: string[]): string {
  if (inputs.length === 0) {
    throw new Error("at least one input file is required");
  }
  switch (kind) {
    case "spectral_trends":
      return renderSpectralTrends(inputs);
    case "training_summary":
      return renderTrainingSummary(inputs);
    case "prediction_overlay":
      return renderPredictionOverlay(inputs);
    case "decision_map":
      return renderDecisionMap(inputs);
    case "spectrum":
      return renderSpectrum(inputs);
  }
}
