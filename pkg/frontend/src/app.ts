/** UI wiring: drawing grid, live prediction, training controls, dataset
 * surgery. All numbers shown come straight from API payloads; this layer
 * only routes them to the DOM. */

import { ApiClient, ApiError } from "./api.js";
import { MetricChart } from "./charts.js";
import { GRID_CELLS, GRID_COLS, GridState } from "./grid.js";
import { drawPixels, drawStage, stageSize } from "./heatmap.js";
import { LivePredictor } from "./predictor.js";
import type {
  DatasetSummary,
  EpochRecord,
  PredictPayload,
  TrainSummary,
} from "./types.js";

export interface SessionView {
  modelId: string | null;
  datasetId: string | null;
  history: EpochRecord[];
  lastPrediction: PredictPayload | null;
  connection: "idle" | "ok" | "error";
  training: boolean;
}

export interface TrainOptions {
  epochs?: number;
  learningRate?: number;
  batchSize?: number;
  shuffleSeed?: number;
  splitSeed?: number;
  fraction?: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function context2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D | null {
  try {
    return canvas.getContext("2d");
  } catch {
    return null; // headless DOM without canvas support
  }
}

export class App {
  readonly grid = new GridState();
  readonly state: SessionView = {
    modelId: null,
    datasetId: null,
    history: [],
    lastPrediction: null,
    connection: "idle",
    training: false,
  };
  readonly lossChart: MetricChart;
  readonly accuracyChart: MetricChart;

  readonly root: HTMLElement;
  private doc: Document;
  private predictor: LivePredictor;
  private cellNodes: HTMLElement[] = [];
  private datasets = new Map<string, DatasetSummary>();

  // Addressable UI pieces (tests reach these through querySelector too).
  private predictedClass: HTMLElement;
  private unsureBadge: HTMLElement;
  private probBars: HTMLElement;
  private heatmaps: HTMLElement;
  private classChips: HTMLElement;
  private gallery: HTMLElement;
  private modelSelect: HTMLSelectElement;
  private datasetSelect: HTMLSelectElement;
  private trainNotice: HTMLElement;
  private trainSummary: HTMLElement;
  private startButton!: HTMLButtonElement;
  private surgeryError: HTMLElement;
  private connectionStatus: HTMLElement;
  private errorBanner: HTMLElement;

  constructor(
    doc: Document,
    readonly api: ApiClient,
    mount?: HTMLElement,
    predictDelayMs = 150,
  ) {
    this.doc = doc;
    this.root = mount ?? el(doc, "div");
    this.root.classList.add("app");
    this.predictor = new LivePredictor(
      (pixels, signal) => {
        if (!this.state.modelId) return Promise.reject(new Error("no model selected"));
        return this.api.predict(this.state.modelId, pixels, signal);
      },
      (payload) => this.showPrediction(payload),
      (error) => this.showError(error),
      predictDelayMs,
    );

    // --- header ---
    const header = el(doc, "header");
    header.appendChild(el(doc, "h1", "", "tinydigits"));
    this.connectionStatus = el(doc, "span", "connection-status", "idle");
    header.appendChild(this.connectionStatus);
    this.root.appendChild(header);

    this.errorBanner = el(doc, "div", "error-banner hidden");
    this.root.appendChild(this.errorBanner);

    const main = el(doc, "main");
    this.root.appendChild(main);

    // --- draw + predict panel ---
    const drawPanel = el(doc, "section", "panel draw-panel");
    drawPanel.appendChild(el(doc, "h2", "", "Draw a digit"));
    const gridNode = el(doc, "div", "grid");
    gridNode.setAttribute("data-testid", "grid");
    for (let i = 0; i < GRID_CELLS; i++) {
      const cell = el(doc, "div", "cell");
      cell.dataset.index = String(i);
      cell.addEventListener("pointerdown", (event) => {
        event.preventDefault();
        this.paintCell(i);
      });
      cell.addEventListener("pointerenter", (event) => {
        if ((event as PointerEvent).buttons) this.paintCell(i);
      });
      gridNode.appendChild(cell);
      this.cellNodes.push(cell);
    }
    drawPanel.appendChild(gridNode);

    const brushRow = el(doc, "div", "controls");
    const paintBtn = el(doc, "button", "brush-paint active", "paint");
    const eraseBtn = el(doc, "button", "brush-erase", "erase");
    const clearBtn = el(doc, "button", "grid-clear", "clear");
    paintBtn.addEventListener("click", () => {
      this.grid.mode = "paint";
      paintBtn.classList.add("active");
      eraseBtn.classList.remove("active");
    });
    eraseBtn.addEventListener("click", () => {
      this.grid.mode = "erase";
      eraseBtn.classList.add("active");
      paintBtn.classList.remove("active");
    });
    clearBtn.addEventListener("click", () => this.clearGrid());
    brushRow.append(paintBtn, eraseBtn, clearBtn);
    drawPanel.appendChild(brushRow);

    const prediction = el(doc, "div", "prediction");
    const headline = el(doc, "div", "prediction-headline");
    this.predictedClass = el(doc, "span", "predicted-class", "—");
    this.unsureBadge = el(doc, "span", "unsure-badge hidden", "unsure");
    headline.append(this.predictedClass, this.unsureBadge);
    prediction.appendChild(headline);
    this.probBars = el(doc, "div", "prob-bars");
    prediction.appendChild(this.probBars);
    drawPanel.appendChild(prediction);

    drawPanel.appendChild(el(doc, "h2", "", "Activations"));
    this.heatmaps = el(doc, "div", "heatmaps");
    drawPanel.appendChild(this.heatmaps);
    main.appendChild(drawPanel);

    // --- model + training panel ---
    const modelPanel = el(doc, "section", "panel model-panel");
    modelPanel.appendChild(el(doc, "h2", "", "Model"));
    this.modelSelect = el(doc, "select", "model-select") as HTMLSelectElement;
    this.modelSelect.addEventListener("change", () => {
      void this.selectModel(this.modelSelect.value);
    });
    modelPanel.appendChild(this.modelSelect);
    const newModelBtn = el(doc, "button", "model-new", "new model");
    newModelBtn.addEventListener("click", () => void this.createModel());
    modelPanel.appendChild(newModelBtn);

    modelPanel.appendChild(el(doc, "h2", "", "Training"));
    const trainForm = el(doc, "div", "train-form");
    const epochsInput = el(doc, "input", "train-epochs") as HTMLInputElement;
    epochsInput.type = "number";
    epochsInput.value = "500";
    trainForm.append(el(doc, "label", "", "epochs"), epochsInput);
    this.startButton = el(doc, "button", "train-start", "start training");
    this.startButton.addEventListener("click", () => {
      void this.startTraining({ epochs: Number(epochsInput.value) });
    });
    trainForm.appendChild(this.startButton);
    modelPanel.appendChild(trainForm);
    this.trainNotice = el(doc, "div", "train-notice");
    modelPanel.appendChild(this.trainNotice);

    this.lossChart = new MetricChart(doc, "loss", null);
    this.accuracyChart = new MetricChart(doc, "accuracy", 1);
    const charts = el(doc, "div", "charts");
    charts.append(this.lossChart.svg, this.accuracyChart.svg);
    modelPanel.appendChild(charts);
    this.trainSummary = el(doc, "div", "train-summary");
    modelPanel.appendChild(this.trainSummary);
    main.appendChild(modelPanel);

    // --- dataset panel ---
    const dataPanel = el(doc, "section", "panel data-panel");
    dataPanel.appendChild(el(doc, "h2", "", "Data"));
    const genBtn = el(doc, "button", "dataset-generate", "generate digits");
    genBtn.addEventListener("click", () => void this.generateDataset());
    dataPanel.appendChild(genBtn);
    this.datasetSelect = el(doc, "select", "dataset-select") as HTMLSelectElement;
    this.datasetSelect.addEventListener("change", () => {
      void this.selectDataset(this.datasetSelect.value);
    });
    dataPanel.appendChild(this.datasetSelect);
    this.classChips = el(doc, "div", "class-chips");
    dataPanel.appendChild(this.classChips);

    const surgery = el(doc, "div", "surgery");
    const replaceBtn = el(doc, "button", "surgery-replace", "replace class 0 with random");
    replaceBtn.addEventListener("click", () => void this.replaceClass(0));
    const rebalanceInput = el(doc, "input", "rebalance-fraction") as HTMLInputElement;
    rebalanceInput.type = "number";
    rebalanceInput.step = "0.05";
    rebalanceInput.value = "0.1";
    const rebalanceClassInput = el(doc, "input", "rebalance-class") as HTMLInputElement;
    rebalanceClassInput.type = "number";
    rebalanceClassInput.value = "7";
    const rebalanceBtn = el(doc, "button", "surgery-rebalance", "rebalance class");
    rebalanceBtn.addEventListener("click", () => {
      void this.rebalanceClass(
        Number(rebalanceClassInput.value),
        Number(rebalanceInput.value),
      );
    });
    this.surgeryError = el(doc, "span", "surgery-error");
    surgery.append(
      replaceBtn,
      rebalanceClassInput,
      rebalanceInput,
      rebalanceBtn,
      this.surgeryError,
    );
    dataPanel.appendChild(surgery);

    dataPanel.appendChild(el(doc, "h2", "", "Gallery"));
    this.gallery = el(doc, "div", "gallery");
    dataPanel.appendChild(this.gallery);
    main.appendChild(dataPanel);

    this.renderGrid();
  }

  // --- connection + errors --------------------------------------------------

  private noteConnection(ok: boolean): void {
    this.state.connection = ok ? "ok" : "error";
    this.connectionStatus.textContent = ok ? "connected" : "connection error";
    this.connectionStatus.classList.toggle("error", !ok);
  }

  private showError(error: unknown): void {
    const message =
      error instanceof ApiError
        ? `${error.message}${error.field ? ` (${error.field})` : ""}`
        : String(error);
    this.errorBanner.textContent = message;
    this.errorBanner.classList.remove("hidden");
    this.noteConnection(false);
  }

  private clearError(): void {
    this.errorBanner.classList.add("hidden");
    this.errorBanner.textContent = "";
  }

  // --- grid + prediction ------------------------------------------------------

  private paintCell(index: number): void {
    this.grid.applyBrush(index);
    this.renderGrid();
    this.schedulePredict();
  }

  clearGrid(): void {
    this.grid.clear();
    this.renderGrid();
    this.schedulePredict();
  }

  paintPattern(values: number[]): void {
    this.grid.loadPattern(values);
    this.renderGrid();
    this.schedulePredict();
  }

  /** Immediate prediction (used by tests and the clear button path). */
  predictNow(): Promise<void> {
    if (!this.state.modelId) return Promise.resolve();
    return this.predictor.flush(this.grid.snapshot());
  }

  private schedulePredict(): void {
    if (this.state.modelId && !this.state.training) {
      this.predictor.request(this.grid.snapshot());
    }
  }

  private renderGrid(): void {
    this.grid.cells.forEach((value, i) => {
      const level = Math.round(255 * value);
      this.cellNodes[i].style.background = `rgb(${level}, ${level}, ${level})`;
      this.cellNodes[i].classList.toggle("lit", value > 0);
    });
  }

  private showPrediction(payload: PredictPayload): void {
    this.state.lastPrediction = payload;
    this.grid.markClean();
    this.clearError();
    this.noteConnection(true);

    this.predictedClass.textContent = payload.prediction.class_name;
    this.unsureBadge.classList.toggle("hidden", payload.prediction.status !== "unsure");

    this.probBars.textContent = "";
    const names = this.currentClassNames(payload.probabilities.length);
    payload.probabilities.forEach((p, i) => {
      const row = el(this.doc, "div", "prob-row");
      row.appendChild(el(this.doc, "span", "prob-label", names[i]));
      const track = el(this.doc, "div", "prob-track");
      const bar = el(this.doc, "div", "prob-bar");
      bar.style.width = `${(p * 100).toFixed(1)}%`;
      bar.dataset.value = String(p); // exact payload value, untransformed
      if (i === payload.prediction.class_index) bar.classList.add("top");
      track.appendChild(bar);
      row.appendChild(track);
      row.appendChild(el(this.doc, "span", "prob-value", (p * 100).toFixed(1) + "%"));
      this.probBars.appendChild(row);
    });

    this.heatmaps.textContent = "";
    for (const stage of payload.activations) {
      const block = el(this.doc, "figure", "heatmap-stage");
      const canvas = el(this.doc, "canvas", "heatmap-canvas") as HTMLCanvasElement;
      const cellPx = stage.rows === 1 ? 10 : 16;
      const { width, height } = stageSize(stage, cellPx);
      canvas.width = width;
      canvas.height = height;
      canvas.title = stage.name;
      const ctx = context2d(canvas);
      if (ctx) drawStage(ctx, stage, cellPx);
      block.appendChild(canvas);
      block.appendChild(el(this.doc, "figcaption", "", stage.name));
      this.heatmaps.appendChild(block);
    }
  }

  private currentClassNames(count: number): string[] {
    // Bars are labeled from the selected dataset when its class count
    // matches the model; otherwise plain indexes.
    const summary = this.state.datasetId
      ? this.datasets.get(this.state.datasetId)
      : undefined;
    if (summary && summary.classes.length === count) return summary.classes;
    return Array.from({ length: count }, (_, i) => String(i));
  }

  // --- models -----------------------------------------------------------------

  async createModel(hiddenUnits = 20, seed = 0): Promise<string> {
    const config = {
      hidden: [{ kind: "dense", units: hiddenUnits, activation: "relu" }],
      output_units: 10,
      seed,
    };
    const { model_id } = await this.api.createModel(config);
    this.addModelOption(model_id);
    await this.selectModel(model_id);
    return model_id;
  }

  async importModel(document: unknown): Promise<string> {
    const { model_id } = await this.api.importModel(document);
    this.addModelOption(model_id);
    await this.selectModel(model_id);
    return model_id;
  }

  private addModelOption(modelId: string): void {
    const option = el(this.doc, "option", "", modelId) as HTMLOptionElement;
    option.value = modelId;
    this.modelSelect.appendChild(option);
    this.modelSelect.value = modelId;
  }

  async selectModel(modelId: string): Promise<void> {
    this.state.modelId = modelId;
    this.modelSelect.value = modelId;
    try {
      const history = await this.api.history(modelId);
      this.loadHistory(history);
      this.noteConnection(true);
    } catch (error) {
      this.showError(error);
    }
  }

  private loadHistory(history: EpochRecord[]): void {
    this.state.history = history.slice();
    this.lossChart.reset(history.length);
    this.accuracyChart.reset(history.length);
    for (const record of history) this.appendEpoch(record, false);
  }

  // --- training ----------------------------------------------------------------

  private appendEpoch(record: EpochRecord, track = true): void {
    if (track) this.state.history.push(record);
    this.lossChart.append({
      epoch: record.epoch,
      train: record.train_loss,
      validation: record.val_loss,
    });
    this.accuracyChart.append({
      epoch: record.epoch,
      train: record.train_acc,
      validation: record.val_acc,
    });
  }

  async startTraining(options: TrainOptions = {}): Promise<TrainSummary | null> {
    if (!this.state.modelId || !this.state.datasetId) {
      this.trainNotice.textContent = "select a model and a dataset first";
      return null;
    }
    if (this.state.training) {
      this.trainNotice.textContent = "already training";
      return null;
    }
    const body = {
      dataset_id: this.state.datasetId,
      fraction: options.fraction ?? 0.8,
      split_seed: options.splitSeed ?? 0,
      hyperparams: {
        learning_rate: options.learningRate ?? 0.1,
        epochs: options.epochs ?? 500,
        batch_size: options.batchSize ?? 16,
        shuffle_seed: options.shuffleSeed ?? 0,
      },
    };
    this.state.training = true;
    this.startButton.disabled = true;
    this.state.history = [];
    this.lossChart.reset(body.hyperparams.epochs);
    this.accuracyChart.reset(body.hyperparams.epochs);
    this.trainNotice.textContent = "training…";
    this.trainSummary.textContent = "";
    let summary: TrainSummary | null = null;
    try {
      await this.api.train(this.state.modelId, body, (event) => {
        if (event.event === "epoch") {
          this.appendEpoch(JSON.parse(event.data) as EpochRecord);
        } else if (event.event === "summary") {
          summary = JSON.parse(event.data) as TrainSummary;
        } else if (event.event === "error") {
          this.trainNotice.textContent = `training failed: ${event.data}`;
        }
      });
      if (summary !== null) {
        const s: TrainSummary = summary;
        this.trainNotice.textContent = "";
        this.trainSummary.textContent =
          `finished ${s.epochs} epochs — ` +
          `train acc ${s.train_acc}, validation acc ${s.val_acc}`;
      }
      this.noteConnection(true);
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        this.trainNotice.textContent = "already training";
      } else {
        // Stream drop: keep the points already charted, tell the user.
        this.trainNotice.textContent = "connection lost — charts keep received epochs";
        this.showError(error);
      }
    } finally {
      this.state.training = false;
      this.startButton.disabled = false;
    }
    return summary;
  }

  // --- datasets ------------------------------------------------------------------

  async generateDataset(perClass = 20, seed = 7, flipProb = 0.1): Promise<string> {
    const { dataset_id, summary } = await this.api.createDataset({
      kind: "digits",
      per_class: perClass,
      flip_prob: flipProb,
      seed,
    });
    this.registerDataset(summary);
    await this.selectDataset(dataset_id);
    return dataset_id;
  }

  private registerDataset(summary: DatasetSummary): void {
    this.datasets.set(summary.dataset_id, summary);
    const existing = Array.from(this.datasetSelect.options).some(
      (o) => o.value === summary.dataset_id,
    );
    if (!existing) {
      const option = el(this.doc, "option", "", summary.dataset_id) as HTMLOptionElement;
      option.value = summary.dataset_id;
      this.datasetSelect.appendChild(option);
    }
  }

  async selectDataset(datasetId: string): Promise<void> {
    this.state.datasetId = datasetId;
    this.datasetSelect.value = datasetId;
    const summary = this.datasets.get(datasetId);
    if (summary) this.renderClassChips(summary);
    try {
      await this.renderGallery(datasetId);
      this.noteConnection(true);
    } catch (error) {
      this.showError(error);
    }
  }

  private renderClassChips(summary: DatasetSummary): void {
    this.classChips.textContent = "";
    summary.classes.forEach((name, i) => {
      const chip = el(this.doc, "span", "class-chip");
      chip.dataset.classIndex = String(i);
      chip.appendChild(el(this.doc, "span", "chip-name", name));
      chip.appendChild(el(this.doc, "span", "chip-count", String(summary.counts[i])));
      this.classChips.appendChild(chip);
    });
  }

  private async renderGallery(datasetId: string): Promise<void> {
    const document = await this.api.getDataset(datasetId);
    this.gallery.textContent = "";
    const firstByClass = new Map<number, number[]>();
    for (const example of document.examples) {
      if (!firstByClass.has(example.class_index)) {
        firstByClass.set(example.class_index, example.pixels);
      }
    }
    for (const [classIndex, pixels] of [...firstByClass.entries()].sort(
      (a, b) => a[0] - b[0],
    )) {
      const figure = el(this.doc, "figure", "gallery-item");
      const canvas = el(this.doc, "canvas", "gallery-canvas") as HTMLCanvasElement;
      canvas.width = 6 * 8;
      canvas.height = 6 * 8;
      const ctx = context2d(canvas);
      if (ctx) drawPixels(ctx, pixels, GRID_COLS, 8);
      figure.appendChild(canvas);
      figure.appendChild(
        el(this.doc, "figcaption", "", document.classes[classIndex]),
      );
      this.gallery.appendChild(figure);
    }
  }

  async replaceClass(classIndex: number, seed = 0): Promise<string | null> {
    if (!this.state.datasetId) return null;
    try {
      const { dataset_id, summary } = await this.api.replaceClass(
        this.state.datasetId,
        classIndex,
        { seed },
      );
      this.surgeryError.textContent = "";
      this.registerDataset(summary);
      await this.selectDataset(dataset_id);
      return dataset_id;
    } catch (error) {
      this.showSurgeryError(error);
      return null;
    }
  }

  private showSurgeryError(error: unknown): void {
    this.surgeryError.textContent =
      error instanceof ApiError
        ? `${error.message}${error.field ? ` (${error.field})` : ""}`
        : String(error);
  }

  async rebalanceClass(
    classIndex: number,
    fraction: number,
    seed = 0,
  ): Promise<string | null> {
    if (!this.state.datasetId) return null;
    try {
      const { dataset_id, summary } = await this.api.rebalance(
        this.state.datasetId,
        { [classIndex]: fraction },
        seed,
      );
      this.surgeryError.textContent = "";
      this.registerDataset(summary);
      await this.selectDataset(dataset_id);
      return dataset_id;
    } catch (error) {
      this.showSurgeryError(error);
      return null;
    }
  }
}

export function createApp(
  doc: Document,
  api: ApiClient,
  mount?: HTMLElement,
  predictDelayMs = 150,
): App {
  return new App(doc, api, mount, predictDelayMs);
}
