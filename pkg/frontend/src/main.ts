import { StudyClient } from "./api.js";
import { renderDone, renderError, renderTask } from "./view.js";

/**
 * Drive the fetch -> rate -> submit -> advance loop for one rater.
 * Query parameters: study, rater, optional language and base (service URL).
 */
export async function runRaterLoop(
  root: HTMLElement,
  client: StudyClient,
  studyId: string,
  raterId: string,
  language?: string,
): Promise<void> {
  for (;;) {
    let task;
    try {
      task = await client.nextTask(studyId, raterId, language);
    } catch (err) {
      renderError(root, err instanceof Error ? err.message : String(err));
      return;
    }
    if (task === null) {
      renderDone(root);
      return;
    }
    await new Promise<void>((resolve) => {
      renderTask(root, task!, {
        onSubmit: (state) => {
          void client
            .submitAnnotation(task!.task_id, state.toPayload())
            .then(() => resolve())
            .catch((err: unknown) => {
              renderError(
                root,
                err instanceof Error ? err.message : String(err),
              );
            });
        },
      });
    });
  }
}

export function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const studyId = params.get("study");
  const raterId = params.get("rater");
  const base = params.get("base") ?? window.location.origin;
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  if (!studyId || !raterId) {
    renderError(root, "study and rater query parameters are required");
    return;
  }
  const client = new StudyClient(base);
  void runRaterLoop(root, client, studyId, raterId, params.get("language") ?? undefined);
}
