export interface VariableSchema {
  name: string;
  categories: string[];
}

export interface SchemaResponse {
  variables: VariableSchema[];
}

export type Method = "A" | "B";

export interface PredictRequest {
  inputs: Record<string, string>;
  method: Method;
  relax?: boolean;
}

export interface PredictResponse {
  curve: { times: number[]; survival: number[] };
  mean: number;
  median: number | null;
  q1: number | null;
  q3: number | null;
  mean_truncated: boolean;
  match_count: number;
  eta: number | null;
  method: Method;
  dropped: string[];
}

export interface EmptyMatchDiagnostics {
  most_restrictive: string;
  singleton_counts: Record<string, number>;
}

export interface ErrorResponse {
  error: string;
  diagnostics?: EmptyMatchDiagnostics;
}
