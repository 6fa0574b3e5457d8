/** DOM wiring: one document's source text beside its predicted labels, each
 * with an agree/disagree/unsure tri-state, plus reviewer progress. The page
 * shows file content and an opaque id only — no metadata that could steer
 * reviewers. Logic lives in state.ts/controller.ts; this file just renders. */

import { ApiClient } from "./api.js";
import { ReviewController, Screen } from "./controller.js";
import { Key, ReviewViewState, allSet, handleKey, progressLabel, setRating } from "./state.js";

const RATINGS = ["agree", "disagree", "unsure"] as const;

function render(root: HTMLElement, controller: ReviewController, screen: Screen): void {
  root.textContent = "";
  for (const n of controller.notices.splice(0)) {
    const banner = el("div", "notice");
    banner.textContent = n.message;
    root.appendChild(banner);
  }
  if (screen.kind === "error") {
    const banner = el("div", "error");
    banner.textContent = `network problem: ${screen.message}`;
    const retry = el("button");
    retry.textContent = "retry";
    retry.onclick = async () => render(root, controller, await screen.retry());
    banner.appendChild(retry);
    root.appendChild(banner);
    return;
  }
  if (screen.kind === "done") {
    const done = el("div", "done");
    done.textContent = `all ${screen.totalDocs} documents reviewed — thank you`;
    root.appendChild(done);
    return;
  }
  renderReview(root, controller, screen.state);
}

function renderReview(root: HTMLElement, controller: ReviewController, state: ReviewViewState) {
  const header = el("div", "header");
  header.textContent = `document ${state.docId} — progress ${progressLabel(state)}`;
  root.appendChild(header);

  const pane = el("div", "pane");
  const code = document.createElement("pre");
  code.className = "source";
  code.textContent = state.text; // monospaced + scrollable via CSS
  pane.appendChild(code);

  const side = el("div", "labels");
  state.rows.forEach((row, i) => {
    const line = el("div", i === state.focusedRow ? "row focused" : "row");
    const name = el("span", "tag");
    name.textContent = `${row.tag} (${row.certainty.toFixed(2)})`;
    line.appendChild(name);
    for (const r of RATINGS) {
      const btn = el("button", row.rating === r ? "set" : "");
      btn.textContent = r;
      btn.onclick = () =>
        renderReview(clear(root), controller, { ...setRating(state, i, r), focusedRow: i });
      line.appendChild(btn);
    }
    side.appendChild(line);
  });
  pane.appendChild(side);
  root.appendChild(pane);

  const submit = document.createElement("button");
  submit.className = "submit";
  submit.textContent = "submit";
  submit.disabled = !allSet(state);
  submit.onclick = async () => render(root, controller, await controller.submitRatings(state));
  root.appendChild(submit);
  if (!allSet(state)) {
    const hint = el("div", "hint");
    hint.textContent = "rate every label (a / d / u) to enable submit";
    root.appendChild(hint);
  }

  document.onkeydown = async (ev) => {
    if (!["a", "d", "u", "Enter", "ArrowDown", "ArrowUp"].includes(ev.key)) return;
    const { state: next, submit: wantSubmit } = handleKey(state, ev.key as Key);
    if (wantSubmit) {
      render(root, controller, await controller.submitRatings(next));
    } else {
      renderReview(clear(root), controller, next);
    }
  };
}

function el(tag: string, className = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function clear(root: HTMLElement): HTMLElement {
  root.textContent = "";
  return root;
}

export async function boot(root: HTMLElement): Promise<void> {
  const reviewer =
    new URLSearchParams(window.location.search).get("reviewer") ??
    window.prompt("reviewer id") ??
    "";
  const controller = new ReviewController(new ApiClient(""), reviewer);
  render(root, controller, await controller.start());
}

const mount = typeof document !== "undefined" ? document.getElementById("app") : null;
if (mount) void boot(mount);
