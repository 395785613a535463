import type { AnnotationPayload, RatingTask } from "./types.js";

export type SubmitResult = "accepted" | "already-recorded";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Thin REST client for the study service. */
export class StudyClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path;
  }

  /** Fetch the next unrated task for a rater, or null when the rater is done. */
  async nextTask(
    studyId: string,
    raterId: string,
    language?: string,
  ): Promise<RatingTask | null> {
    const params = new URLSearchParams({ rater: raterId });
    if (language) params.set("language", language);
    const res = await this.fetchFn(
      this.url(`/studies/${encodeURIComponent(studyId)}/tasks/next?${params}`),
    );
    if (!res.ok) {
      throw new ApiError(res.status, await res.text());
    }
    const body = (await res.json()) as RatingTask | { task_id: null };
    return body.task_id === null ? null : (body as RatingTask);
  }

  /**
   * Submit an annotation. Network failures are retried; a 409 from the
   * service means the annotation is already on record (e.g. a retry of a
   * request whose response was lost) and is reported as success.
   */
  async submitAnnotation(
    taskId: string,
    payload: AnnotationPayload,
    retries = 2,
  ): Promise<SubmitResult> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= retries; attempt++) {
      let res: Response;
      try {
        res = await this.fetchFn(
          this.url(`/tasks/${encodeURIComponent(taskId)}/annotation`),
          {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(payload),
          },
        );
      } catch (err) {
        lastError = err;
        continue;
      }
      if (res.ok) return "accepted";
      if (res.status === 409) return "already-recorded";
      throw new ApiError(res.status, await res.text());
    }
    throw lastError instanceof Error
      ? lastError
      : new Error("submission failed after retries");
  }
}
