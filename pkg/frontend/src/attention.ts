/** Rendering of per-hop attention weights as bars aligned with the
 * history utterances the model attended over. */

export interface AttentionRow {
  /** History utterance the weights refer to. */
  label: string;
  /** One weight per hop for this utterance. */
  weights: number[];
}

/**
 * Pair each history utterance with its weight in every hop.
 *
 * `attention` is hop-major (one array per hop, one entry per history
 * utterance at the time the reply was produced); `history` must list those
 * utterances in the same order.
 */
export function attentionRows(
  attention: number[][],
  history: string[],
): AttentionRow[] {
  if (attention.length === 0) return [];
  const slots = attention[0].length;
  if (slots !== history.length) {
    throw new Error(
      `attention covers ${slots} utterances but history has ${history.length}`,
    );
  }
  return history.map((label, i) => ({
    label,
    weights: attention.map((hop) => hop[i]),
  }));
}

/** Sum of weights per hop; each should be ≈ 1 for a well-formed reply. */
export function hopTotals(attention: number[][]): number[] {
  return attention.map((hop) => hop.reduce((a, b) => a + b, 0));
}

export function renderAttention(
  attention: number[][],
  history: string[],
): HTMLElement {
  const container = document.createElement("div");
  container.className = "attention";
  const rows = attentionRows(attention, history);
  if (rows.length === 0) {
    container.textContent = "(no history attended)";
    return container;
  }
  for (const row of rows) {
    const rowEl = document.createElement("div");
    rowEl.className = "attention-row";
    const label = document.createElement("span");
    label.className = "attention-label";
    label.textContent = row.label;
    rowEl.appendChild(label);
    row.weights.forEach((w, hop) => {
      const bar = document.createElement("span");
      bar.className = "attention-bar";
      bar.style.width = `${Math.round(w * 100)}px`;
      bar.title = `hop ${hop + 1}: ${w.toFixed(3)}`;
      rowEl.appendChild(bar);
    });
    container.appendChild(rowEl);
  }
  return container;
}
