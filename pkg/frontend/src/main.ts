/** Console wiring: session creation, ticket loop, keyboard shortcuts.
 *
 * One pending ticket at a time; the answer buttons are disabled while a post
 * is in flight, and every answer corresponds to one explicit user action.
 */

import { SessionApi, type Answer, type DatasetPoint, type Ticket } from "./api.js";
import { answerForKey, buildScene } from "./model.js";
import { renderScene } from "./render.js";

const api = new SessionApi("");

interface AppState {
  sessionId: string | null;
  points: DatasetPoint[];
  ticket: Ticket | null;
  busy: boolean;
}

const state: AppState = { sessionId: null, points: [], ticket: null, busy: false };

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const svg = byId<HTMLElement>("scatter") as unknown as SVGSVGElement;
const statusLine = byId<HTMLDivElement>("status");
const progressLine = byId<HTMLDivElement>("progress");
const buttons = {
  1: byId<HTMLButtonElement>("btn-same"),
  0: byId<HTMLButtonElement>("btn-unsure"),
  "-1": byId<HTMLButtonElement>("btn-diff"),
};

function setBusy(busy: boolean): void {
  state.busy = busy;
  const disabled = busy || state.ticket === null;
  buttons[1].disabled = disabled;
  buttons[0].disabled = disabled;
  buttons["-1"].disabled = disabled;
}

async function refresh(): Promise<void> {
  if (!state.sessionId) return;
  const [stateView, nextView] = await Promise.all([
    api.state(state.sessionId),
    api.next(state.sessionId),
  ]);
  state.ticket = nextView.status === "finished" ? null : nextView.ticket ?? null;
  const scene = buildScene(state.points, stateView.snapshot, state.ticket);
  renderScene(svg, scene);
  progressLine.textContent = scene.progress;
  if (nextView.status === "finished") {
    const sizes = (stateView.summary?.cluster_sizes ?? {}) as Record<string, number>;
    const described = Object.entries(sizes)
      .map(([label, count]) => `${label === "0" ? "unassigned" : "cluster " + label}: ${count}`)
      .join(", ");
    statusLine.textContent = `finished - ${described}`;
  } else {
    statusLine.textContent = state.ticket
      ? `ticket #${state.ticket.ticket}: are the two highlighted points in the same cluster?`
      : "waiting";
  }
  setBusy(false);
}

async function submit(answer: Answer): Promise<void> {
  if (!state.sessionId || !state.ticket || state.busy) return;
  setBusy(true);
  try {
    await api.answer(state.sessionId, state.ticket.ticket, answer);
  } catch (err) {
    statusLine.textContent = `error: ${(err as Error).message}; refreshing`;
  }
  await refresh();
}

async function startSession(): Promise<void> {
  const n = Number(byId<HTMLInputElement>("gen-n").value);
  const k = Number(byId<HTMLInputElement>("gen-k").value);
  const seed = Number(byId<HTMLInputElement>("gen-seed").value);
  const eta = Number(byId<HTMLInputElement>("param-eta").value);
  statusLine.textContent = "creating session...";
  try {
    const created = await api.createSession({
      dataset: {
        gen: { n, m: 2, k, sigma_std: 1.75, gamma_min: 1.0, gamma_max: 1.1, seed },
      },
      params: { k, eta, beta: 10, variant: "distance", policy: "treat_as_different", seed },
      oracle: { kind: "human" },
    });
    state.sessionId = created.id;
    const dataset = await api.dataset(created.id);
    state.points = dataset.points;
    byId<HTMLDivElement>("session-info").textContent =
      `session ${created.id} - ${created.n} points, k=${created.k}`;
    await refresh();
  } catch (err) {
    statusLine.textContent = `error: ${(err as Error).message}`;
  }
}

export function init(): void {
  byId<HTMLButtonElement>("btn-start").addEventListener("click", () => void startSession());
  buttons[1].addEventListener("click", () => void submit(1));
  buttons[0].addEventListener("click", () => void submit(0));
  buttons["-1"].addEventListener("click", () => void submit(-1));
  document.addEventListener("keydown", (event) => {
    const answer = answerForKey(event.key);
    if (answer !== null) {
      void submit(answer);
    }
  });
  setBusy(false);
}

init();
