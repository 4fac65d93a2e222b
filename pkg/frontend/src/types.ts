// Wire types of the annotation service API.

export type SessionStatus = "AwaitingLabel" | "Retraining" | "Complete" | "Suspended";

export interface PendingQuery {
  step: number;
  trajectory_id: number;
  informativeness: number;
}

export interface SessionHandle {
  session_id: string;
  status: SessionStatus;
  step: number;
  budget: number;
  budget_remaining: number;
  mode: "classification" | "discovery";
  strategy: string;
  pending: PendingQuery | null;
}

export interface NextQuery {
  session_id: string;
  status: string;
  step: number;
  trajectory_id: number;
  informativeness: number;
  frames: number[][];
  channel_names: string[];
  candidate_labels: string[];
}

export interface Metrics {
  session_id: string;
  mode: string;
  steps: number[];
  values: number[];
}

export interface LogRecord {
  step: number;
  trajectory_id: number;
  informativeness: number;
  strategy: string;
  label: string | null;
}

export interface Log {
  session_id: string;
  records: LogRecord[];
}

export interface SessionCreateRequest {
  manifest: string;
  embedding: string;
  session_id?: string;
  config: {
    strategy: "random" | "margin" | "entropy";
    classifier?: "svm" | "nn";
    budget: number;
    seed?: number;
    mode?: "classification" | "discovery";
    svm_C?: number;
    svm_gamma?: number;
    nn_epochs?: number;
  };
}

export const LABEL_TEXT: Record<string, string> = {
  left_drive_by: "Left drive by",
  right_drive_by: "Right drive by",
  cut_in: "Cut in",
  unknown: "Other / Unknown",
};

export const LABEL_KEYS: Record<string, string> = {
  left_drive_by: "1",
  right_drive_by: "2",
  cut_in: "3",
  unknown: "0",
};
