/** Wire types mirroring the service's JSON bodies. */

export interface ScoreJson {
  raw_cosine: number;
  reported: number;
}

export interface PromptJson {
  fragments: string[];
  provenance: string[];
}

export interface ImageJson {
  id: string;
  width: number;
  height: number;
  seed: number | null;
  path: string | null;
}

export interface IterationJson {
  step: number;
  prompt_in: PromptJson;
  generated_image: ImageJson | null;
  differences: string[];
  candidates: string[];
  prompt_out: PromptJson;
  score_in: ScoreJson;
  score_out: ScoreJson;
  wall_time: number;
}

export interface IterationsPage {
  iterations: IterationJson[];
  next_since: number;
  done: boolean;
}

export type RunStatus = 'queued' | 'running' | 'done' | 'failed';

export interface RunResultJson {
  run_id: string;
  initial_prompt: PromptJson;
  final_prompt: PromptJson;
  final_score: ScoreJson;
  stop_reason: string;
  iterations: IterationJson[];
  aspect_hints: Record<string, string>;
}

export interface RunHandleJson {
  run_id: string;
  status: RunStatus;
  progress: { completed: number; max: number };
  error: string | null;
  result: RunResultJson | null;
}

export interface ClassifiedJson {
  content: string[];
  style: string[];
  origin?: string;
}

export interface GenerateRequest {
  prompt: string[];
  seed: number;
  width: number;
  height: number;
}

export interface GenerateResponse {
  id: string;
  image_b64: string;
  width: number;
  height: number;
  seed: number;
}
