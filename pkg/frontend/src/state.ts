/** Pure review-screen state: one document, its top-k predicted labels, and a
 * tri-state control per label. Controls always start unset — the UI never
 * defaults a judgment — and submission is allowed only once every control is
 * set. Label order is exactly the server's order. */

import type { DocumentDetail, Rating } from "./api.js";

export interface LabelRow {
  tag: string;
  certainty: number;
  rating: Rating | null; // null = unset
}

export interface ReviewViewState {
  docId: number;
  path: string;
  text: string;
  rows: LabelRow[];
  reviewerId: string;
  ratedDocs: number;
  totalDocs: number;
  focusedRow: number;
}

export function freshState(
  doc: DocumentDetail,
  reviewerId: string,
  ratedDocs: number,
  totalDocs: number,
): ReviewViewState {
  return {
    docId: doc.id,
    path: doc.path,
    text: doc.text,
    rows: doc.predictions.map((p) => ({ tag: p.tag, certainty: p.certainty, rating: null })),
    reviewerId,
    ratedDocs,
    totalDocs,
    focusedRow: 0,
  };
}

export function setRating(state: ReviewViewState, row: number, rating: Rating): ReviewViewState {
  if (row < 0 || row >= state.rows.length) return state;
  const rows = state.rows.map((r, i) => (i === row ? { ...r, rating } : r));
  return { ...state, rows };
}

export function allSet(state: ReviewViewState): boolean {
  return state.rows.length > 0 && state.rows.every((r) => r.rating !== null);
}

export function unsetRows(state: ReviewViewState): number[] {
  return state.rows.flatMap((r, i) => (r.rating === null ? [i] : []));
}

export function progressLabel(state: ReviewViewState): string {
  return `${state.ratedDocs} / ${state.totalDocs}`;
}

export type Key = "a" | "d" | "u" | "Enter" | "ArrowDown" | "ArrowUp";

export interface KeyOutcome {
  state: ReviewViewState;
  submit: boolean;
}

/** Keyboard model: a/d/u rate the focused row and advance focus; arrows move
 * focus; Enter requests submission (honored only when every row is set). */
export function handleKey(state: ReviewViewState, key: Key): KeyOutcome {
  const ratings: Record<string, Rating> = { a: "agree", d: "disagree", u: "unsure" };
  if (key in ratings) {
    const next = setRating(state, state.focusedRow, ratings[key]);
    const focusedRow = Math.min(state.focusedRow + 1, state.rows.length - 1);
    return { state: { ...next, focusedRow }, submit: false };
  }
  if (key === "ArrowDown" || key === "ArrowUp") {
    const delta = key === "ArrowDown" ? 1 : -1;
    const focusedRow = Math.min(Math.max(state.focusedRow + delta, 0), state.rows.length - 1);
    return { state: { ...state, focusedRow }, submit: false };
  }
  return { state, submit: allSet(state) };
}
