import { DIMENSION_LABELS, QUALITY_DIMENSIONS, RUBRIC } from "./rubric.js";
import { TaskState } from "./state.js";
import type { ErrorKind, RatingTask, Section } from "./types.js";

const SECTIONS: Section[] = ["findings", "impression"];
const ERROR_KINDS: ErrorKind[] = ["omission", "incorrection"];

export interface ViewHandlers {
  onSubmit: (state: TaskState) => void;
}

/** Render a rating task into `root` and wire up all interactions. */
export function renderTask(
  root: HTMLElement,
  task: RatingTask,
  handlers: ViewHandlers,
): TaskState {
  const state = new TaskState(task);
  const doc = root.ownerDocument;

  const rerender = (): void => {
    root.textContent = "";

    const heading = doc.createElement("h2");
    heading.textContent = `Case ${task.case_id}`;
    root.appendChild(heading);

    const hint = doc.createElement("p");
    hint.className = "rank-hint";
    hint.textContent =
      "Order the candidate reports from best (top) to worst (bottom), " +
      "score each on the four quality dimensions, and record any " +
      "omissions or incorrections per section.";
    root.appendChild(hint);

    const list = doc.createElement("ol");
    list.className = "candidates";
    const byAlias = new Map(task.presented.map((r) => [r.alias, r]));

    state.aliases.forEach((alias, index) => {
      const report = byAlias.get(alias)!;
      const item = doc.createElement("li");
      item.className = "candidate";
      item.dataset.alias = alias;

      const title = doc.createElement("h3");
      title.textContent = `${alias} — rank ${index + 1}`;
      item.appendChild(title);

      const controls = doc.createElement("div");
      controls.className = "rank-controls";
      const up = doc.createElement("button");
      up.type = "button";
      up.className = "move-up";
      up.textContent = "Move up";
      up.disabled = index === 0;
      up.addEventListener("click", () => {
        state.moveAlias(alias, index - 1);
        rerender();
      });
      const down = doc.createElement("button");
      down.type = "button";
      down.className = "move-down";
      down.textContent = "Move down";
      down.disabled = index === state.aliases.length - 1;
      down.addEventListener("click", () => {
        state.moveAlias(alias, index + 1);
        rerender();
      });
      controls.append(up, down);
      item.appendChild(controls);

      for (const section of SECTIONS) {
        const pane = doc.createElement("section");
        pane.className = `pane ${section}`;
        const label = doc.createElement("h4");
        label.textContent =
          section === "findings" ? "Findings" : "Impression";
        const body = doc.createElement("p");
        body.textContent = report[section];
        pane.append(label, body);
        item.appendChild(pane);
      }

      const qualityBlock = doc.createElement("div");
      qualityBlock.className = "quality";
      for (const dim of QUALITY_DIMENSIONS) {
        const row = doc.createElement("label");
        row.className = `quality-row ${dim}`;
        row.textContent = DIMENSION_LABELS[dim] + " ";
        const select = doc.createElement("select");
        select.dataset.dimension = dim;
        const placeholder = doc.createElement("option");
        placeholder.value = "";
        placeholder.textContent = "—";
        select.appendChild(placeholder);
        for (const score of [1, 2, 3, 4]) {
          const opt = doc.createElement("option");
          opt.value = String(score);
          opt.textContent = String(score);
          opt.title = RUBRIC[dim][score];
          if (state.getQuality(alias, dim) === score) opt.selected = true;
          select.appendChild(opt);
        }
        select.addEventListener("change", () => {
          if (select.value !== "") {
            state.setQuality(alias, dim, Number(select.value));
            rerender();
          }
        });
        row.appendChild(select);
        qualityBlock.appendChild(row);
      }
      item.appendChild(qualityBlock);

      const errorBlock = doc.createElement("div");
      errorBlock.className = "errors";
      for (const section of SECTIONS) {
        for (const kind of ERROR_KINDS) {
          const add = doc.createElement("button");
          add.type = "button";
          add.className = `add-error ${section} ${kind}`;
          add.textContent = `Add ${kind} (${section})`;
          add.addEventListener("click", () => {
            state.addError(alias, section, kind);
            rerender();
          });
          errorBlock.appendChild(add);
        }
      }
      const errorList = doc.createElement("ul");
      errorList.className = "error-items";
      state.getErrors(alias).forEach((err, i) => {
        const li = doc.createElement("li");
        li.textContent = `${err.kind} in ${err.section} `;
        const sig = doc.createElement("input");
        sig.type = "checkbox";
        sig.className = "significant";
        sig.checked = err.clinically_significant;
        sig.addEventListener("change", () => {
          state.toggleSignificant(alias, i);
          rerender();
        });
        const sigLabel = doc.createElement("label");
        sigLabel.append(sig, doc.createTextNode("clinically significant"));
        const remove = doc.createElement("button");
        remove.type = "button";
        remove.className = "remove-error";
        remove.textContent = "Remove";
        remove.addEventListener("click", () => {
          state.removeError(alias, i);
          rerender();
        });
        li.append(sigLabel, remove);
        errorList.appendChild(li);
      });
      errorBlock.appendChild(errorList);
      item.appendChild(errorBlock);

      list.appendChild(item);
    });
    root.appendChild(list);

    const submit = doc.createElement("button");
    submit.type = "button";
    submit.className = "submit";
    submit.textContent = "Submit annotation";
    submit.disabled = !state.isComplete();
    submit.addEventListener("click", () => handlers.onSubmit(state));
    root.appendChild(submit);
  };

  rerender();
  return state;
}

export function renderDone(root: HTMLElement): void {
  root.textContent = "";
  const msg = root.ownerDocument.createElement("p");
  msg.className = "done";
  msg.textContent = "All assigned cases are rated. Thank you.";
  root.appendChild(msg);
}

export function renderError(root: HTMLElement, detail: string): void {
  root.textContent = "";
  const msg = root.ownerDocument.createElement("p");
  msg.className = "error";
  msg.textContent = `Something went wrong: ${detail}. Retry when the connection is back.`;
  root.appendChild(msg);
}
