/** Four quality dimensions, each scored 1 (best) to 4 (worst). */
export const QUALITY_DIMENSIONS = [
  "factual_consistency",
  "coherence",
  "medical_safety",
  "clinical_use",
] as const;

export type QualityDimension = (typeof QUALITY_DIMENSIONS)[number];

export const DIMENSION_LABELS: Record<QualityDimension, string> = {
  factual_consistency: "Factual consistency",
  coherence: "Coherence",
  medical_safety: "Medical safety",
  clinical_use: "Clinical use",
};

/** Per-score rubric anchors shown inline as tooltips. */
export const RUBRIC: Record<QualityDimension, Record<number, string>> = {
  factual_consistency: {
    1: "The report is completely accurate.",
    2: "The report provides accurate diagnosis of critical diseases with some errors in noncritical ones.",
    3: "The report contains misdiagnoses or over-diagnoses of critical diseases.",
    4: "The report contains completely incorrect diagnoses.",
  },
  coherence: {
    1: "The report has the correct format, clear logic, and concise phrasing.",
    2: "The report has the correct format but with redundant or oversimplified expressions.",
    3: "The report has an incorrect format and logical errors.",
    4: "The report is completely unreadable.",
  },
  medical_safety: {
    1: "The report can be signed off directly and is considered safe for patient care.",
    2: "The report contains minor flaws that can be corrected with minimal edits before signing.",
    3: "The report contains significant errors requiring substantial revisions.",
    4: "The report is an entirely unusable report that poses a risk to patient safety and requires extensive rework or a complete rewrite.",
  },
  clinical_use: {
    1: "The report fully addresses the clinical question, with a definitive diagnosis of the target lesion and accurate description of extent, margins, and adjacent structures.",
    2: "The report partially addresses the clinical question; descriptions of lesion extent, margins, or adjacent structures are incomplete.",
    3: "The report minimally addresses the clinical question; diagnosis and characterization are ambiguous.",
    4: "The report barely addresses the clinical question; diagnosis is incorrect or contradictory.",
  },
};
