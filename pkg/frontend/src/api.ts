import { assertBlinded, EvalOption, NextPayload, Progress } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export type SubmitResult = "stored" | "conflict";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

/** Thin client over the four annotation endpoints. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike,
  ) {}

  async nextItem(annotatorId: string): Promise<NextPayload> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/assignments/next?annotator=${encodeURIComponent(annotatorId)}`,
    );
    if (!response.ok) {
      throw new ApiError(`next item failed (${response.status})`, response.status);
    }
    const payload = (await response.json()) as Record<string, unknown>;
    assertBlinded(payload);
    return payload as unknown as NextPayload;
  }

  async submit(itemId: string, annotatorId: string, option: EvalOption): Promise<SubmitResult> {
    const response = await this.fetchFn(`${this.baseUrl}/api/responses`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ item_id: itemId, annotator_id: annotatorId, option }),
    });
    if (response.status === 201) {
      return "stored";
    }
    if (response.status === 409) {
      return "conflict"; // already answered; caller skips forward
    }
    throw new ApiError(`submit failed (${response.status})`, response.status);
  }

  async progress(annotatorId: string): Promise<Progress> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/progress?annotator=${encodeURIComponent(annotatorId)}`,
    );
    if (!response.ok) {
      throw new ApiError(`progress failed (${response.status})`, response.status);
    }
    return (await response.json()) as Progress;
  }
}
