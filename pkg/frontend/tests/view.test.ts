// @vitest-environment jsdom
import { describe, expect, it, vi } from "vitest";
import { QUALITY_DIMENSIONS } from "../src/rubric.js";
import { renderDone, renderTask } from "../src/view.js";
import type { RatingTask } from "../src/types.js";

const ARM_NAMES = [
  "GroundTruth",
  "AI",
  "Novice",
  "Intermediate",
  "Senior",
  "CoNovice",
  "CoIntermediate",
  "CoSenior",
];

function makeTask(scale: number): RatingTask {
  const aliases = "ABCDEF".slice(0, scale).split("");
  return {
    task_id: "s1:r1:case-7",
    rater_id: "r1",
    case_id: "case-7",
    scale,
    language: "en",
    presented: aliases.map((c) => ({
      alias: `Report ${c}`,
      findings: `Findings text ${c}.`,
      impression: `Impression text ${c}.`,
    })),
  };
}

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

describe("renderTask", () => {
  it("renders all six candidates of a scale-6 task with both sections", () => {
    const root = mount();
    renderTask(root, makeTask(6), { onSubmit: () => {} });
    const items = root.querySelectorAll("li.candidate");
    expect(items).toHaveLength(6);
    for (const [i, item] of [...items].entries()) {
      expect(item.querySelector("h3")!.textContent).toContain(
        `Report ${"ABCDEF"[i]}`,
      );
      expect(item.querySelector(".pane.findings p")!.textContent).toBe(
        `Findings text ${"ABCDEF"[i]}.`,
      );
      expect(item.querySelector(".pane.impression p")!.textContent).toBe(
        `Impression text ${"ABCDEF"[i]}.`,
      );
      expect(item.querySelectorAll("select")).toHaveLength(
        QUALITY_DIMENSIONS.length,
      );
    }
  });

  it("never shows arm names, only blinded aliases", () => {
    const root = mount();
    renderTask(root, makeTask(6), { onSubmit: () => {} });
    const html = root.innerHTML;
    for (const arm of ARM_NAMES) {
      expect(html).not.toContain(arm);
    }
    expect(html).toContain("Report A");
  });

  it("shows the rubric anchor as a tooltip on each score option", () => {
    const root = mount();
    renderTask(root, makeTask(4), { onSubmit: () => {} });
    const select = root.querySelector<HTMLSelectElement>(
      'select[data-dimension="coherence"]',
    )!;
    const scoreOne = select.querySelector<HTMLOptionElement>(
      'option[value="1"]',
    )!;
    expect(scoreOne.title).toContain("correct format, clear logic");
    const safety = root.querySelector<HTMLSelectElement>(
      'select[data-dimension="medical_safety"]',
    )!;
    expect(
      safety.querySelector<HTMLOptionElement>('option[value="1"]')!.title,
    ).toContain("signed off directly");
  });

  it("enables submit only once every candidate is fully scored", () => {
    const root = mount();
    const onSubmit = vi.fn();
    const state = renderTask(root, makeTask(4), { onSubmit });
    const submitButton = () =>
      root.querySelector<HTMLButtonElement>("button.submit")!;
    expect(submitButton().disabled).toBe(true);

    for (const alias of state.aliases) {
      for (const dim of QUALITY_DIMENSIONS) {
        state.setQuality(alias, dim, 3);
      }
    }
    // Drive one selection through the DOM to exercise the change handler.
    const select = root.querySelector<HTMLSelectElement>(
      'li[data-alias="Report A"] select[data-dimension="coherence"]',
    )!;
    select.value = "1";
    select.dispatchEvent(new Event("change"));
    expect(state.getQuality("Report A", "coherence")).toBe(1);

    expect(submitButton().disabled).toBe(false);
    submitButton().click();
    expect(onSubmit).toHaveBeenCalledOnce();
    expect(onSubmit.mock.calls[0][0].toPayload().ranks["Report A"]).toBe(1);
  });

  it("reorders candidates with the move buttons and re-ranks them", () => {
    const root = mount();
    const state = renderTask(root, makeTask(4), { onSubmit: () => {} });
    const down = root.querySelector<HTMLButtonElement>(
      'li[data-alias="Report A"] button.move-down',
    )!;
    down.click();
    expect(state.aliases).toEqual([
      "Report B",
      "Report A",
      "Report C",
      "Report D",
    ]);
    const first = root.querySelector("li.candidate h3")!;
    expect(first.textContent).toContain("Report B");
    expect(first.textContent).toContain("rank 1");
    expect(
      root.querySelector<HTMLButtonElement>(
        "li.candidate:first-child button.move-up",
      )!.disabled,
    ).toBe(true);
  });

  it("adds, toggles, and removes error items through the controls", () => {
    const root = mount();
    const state = renderTask(root, makeTask(4), { onSubmit: () => {} });
    const add = root.querySelector<HTMLButtonElement>(
      'li[data-alias="Report C"] button.add-error.findings.omission',
    )!;
    add.click();
    expect(state.getErrors("Report C")).toEqual([
      { section: "findings", kind: "omission", clinically_significant: false },
    ]);
    const sig = root.querySelector<HTMLInputElement>(
      'li[data-alias="Report C"] input.significant',
    )!;
    sig.checked = true;
    sig.dispatchEvent(new Event("change"));
    expect(state.getErrors("Report C")[0].clinically_significant).toBe(true);
    root
      .querySelector<HTMLButtonElement>(
        'li[data-alias="Report C"] button.remove-error',
      )!
      .click();
    expect(state.getErrors("Report C")).toHaveLength(0);
  });
});

describe("renderDone", () => {
  it("shows the completion screen", () => {
    const root = mount();
    renderDone(root);
    expect(root.querySelector("p.done")!.textContent).toContain("rated");
  });
});
