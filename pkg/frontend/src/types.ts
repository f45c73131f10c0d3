/** Payload shapes of the tinydigits HTTP API. The UI treats every number
 * in these payloads as opaque: probabilities, metrics, and heatmap levels
 * are displayed exactly as received, never recomputed. */

export interface HeatmapStage {
  name: string;
  rows: number;
  cols: number;
  levels: number[];
}

export interface PredictionInfo {
  class_index: number;
  class_name: string;
  probabilities: number[];
  status: "confident" | "unsure";
}

export interface PredictPayload {
  prediction: PredictionInfo;
  probabilities: number[];
  activations: HeatmapStage[];
}

export interface EpochRecord {
  epoch: number;
  train_loss: number;
  train_acc: number;
  val_loss: number;
  val_acc: number;
}

export interface TrainSummary {
  epochs: number;
  train_loss: number;
  train_acc: number;
  val_loss: number;
  val_acc: number;
}

export interface DatasetSummary {
  dataset_id: string;
  name: string;
  classes: string[];
  counts: number[];
}

export interface DatasetDocument {
  dataset_id: string;
  name: string;
  classes: string[];
  counts: number[];
  examples: { pixels: number[]; class_index: number }[];
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
  field?: string;
}
