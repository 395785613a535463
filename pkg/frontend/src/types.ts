export interface PresentedReport {
  alias: string;
  findings: string;
  impression: string;
}

export interface RatingTask {
  task_id: string;
  rater_id: string;
  case_id: string;
  scale: number;
  language: string;
  presented: PresentedReport[];
}

export type Section = "findings" | "impression";
export type ErrorKind = "omission" | "incorrection";

export interface ErrorItem {
  section: Section;
  kind: ErrorKind;
  clinically_significant: boolean;
}

export interface AnnotationPayload {
  ranks: Record<string, number>;
  quality: Record<string, Record<string, number>>;
  errors: Record<string, ErrorItem[]>;
}
