/** Wire types for the annotation service. */

export interface Progress {
  done: number;
  total: number;
}

/** A blinded pair to judge; the payload never carries source or side fields. */
export interface TaskPayload {
  item_id: string;
  summary_a: string;
  summary_b: string;
  progress: Progress;
}

export interface DonePayload {
  done: true;
  progress: Progress;
}

export type NextPayload = TaskPayload | DonePayload;

export function isDone(payload: NextPayload): payload is DonePayload {
  return (payload as DonePayload).done === true;
}

export type EvalOption =
  | "a_only_valid"
  | "b_only_valid"
  | "both_valid"
  | "neither_valid";

export const OPTION_LABELS: ReadonlyArray<[EvalOption, string]> = [
  ["a_only_valid", "Summary A is valid, Summary B is not"],
  ["b_only_valid", "Summary B is valid, Summary A is not"],
  ["both_valid", "Both summaries are valid"],
  ["neither_valid", "Neither summary is valid"],
];

const TASK_KEYS = new Set(["item_id", "summary_a", "summary_b", "progress", "done"]);

/**
 * Defense for the blinding contract: refuse payloads that leak anything
 * beyond the published task fields (sources, side flags, utterance ids).
 */
export function assertBlinded(payload: Record<string, unknown>): void {
  for (const key of Object.keys(payload)) {
    if (!TASK_KEYS.has(key)) {
      throw new Error(`blinding violation: unexpected field "${key}" in task payload`);
    }
  }
}
