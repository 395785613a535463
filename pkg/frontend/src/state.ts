import { QUALITY_DIMENSIONS } from "./rubric.js";
import type {
  AnnotationPayload,
  ErrorItem,
  ErrorKind,
  RatingTask,
  Section,
} from "./types.js";

/**
 * In-progress annotation for one task.
 *
 * Ranking is kept as an ordered list of aliases (best first), so the
 * emitted ranks are a permutation of 1..n by construction.
 */
export class TaskState {
  readonly task: RatingTask;
  private order: string[];
  private quality = new Map<string, Map<string, number>>();
  private errors = new Map<string, ErrorItem[]>();

  constructor(task: RatingTask) {
    this.task = task;
    this.order = task.presented.map((r) => r.alias);
    for (const alias of this.order) {
      this.quality.set(alias, new Map());
      this.errors.set(alias, []);
    }
  }

  get aliases(): string[] {
    return [...this.order];
  }

  private checkAlias(alias: string): void {
    if (!this.errors.has(alias)) {
      throw new Error(`unknown alias: ${alias}`);
    }
  }

  /** Move an alias to a new position in the best-first ordering. */
  moveAlias(alias: string, toIndex: number): void {
    this.checkAlias(alias);
    if (toIndex < 0 || toIndex >= this.order.length) {
      throw new Error(`position out of range: ${toIndex}`);
    }
    const from = this.order.indexOf(alias);
    this.order.splice(from, 1);
    this.order.splice(toIndex, 0, alias);
  }

  setQuality(alias: string, dimension: string, score: number): void {
    this.checkAlias(alias);
    if (!(QUALITY_DIMENSIONS as readonly string[]).includes(dimension)) {
      throw new Error(`unknown dimension: ${dimension}`);
    }
    if (!Number.isInteger(score) || score < 1 || score > 4) {
      throw new Error(`score must be an integer in 1..4, got ${score}`);
    }
    this.quality.get(alias)!.set(dimension, score);
  }

  getQuality(alias: string, dimension: string): number | undefined {
    return this.quality.get(alias)?.get(dimension);
  }

  addError(alias: string, section: Section, kind: ErrorKind): number {
    this.checkAlias(alias);
    const items = this.errors.get(alias)!;
    items.push({ section, kind, clinically_significant: false });
    return items.length - 1;
  }

  removeError(alias: string, index: number): void {
    this.checkAlias(alias);
    const items = this.errors.get(alias)!;
    if (index < 0 || index >= items.length) {
      throw new Error(`no error item at index ${index}`);
    }
    items.splice(index, 1);
  }

  toggleSignificant(alias: string, index: number): void {
    this.checkAlias(alias);
    const items = this.errors.get(alias)!;
    if (index < 0 || index >= items.length) {
      throw new Error(`no error item at index ${index}`);
    }
    items[index].clinically_significant = !items[index].clinically_significant;
  }

  getErrors(alias: string): ErrorItem[] {
    this.checkAlias(alias);
    return this.errors.get(alias)!.map((e) => ({ ...e }));
  }

  /** Complete once every candidate has a score on every dimension. */
  isComplete(): boolean {
    return this.order.every(
      (alias) => this.quality.get(alias)!.size === QUALITY_DIMENSIONS.length,
    );
  }

  toPayload(): AnnotationPayload {
    if (!this.isComplete()) {
      throw new Error("annotation incomplete: missing quality scores");
    }
    const ranks: Record<string, number> = {};
    this.order.forEach((alias, i) => {
      ranks[alias] = i + 1;
    });
    const quality: Record<string, Record<string, number>> = {};
    const errors: Record<string, ErrorItem[]> = {};
    for (const alias of this.order) {
      quality[alias] = Object.fromEntries(this.quality.get(alias)!);
      errors[alias] = this.getErrors(alias);
    }
    return { ranks, quality, errors };
  }
}
