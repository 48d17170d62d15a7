/** Pure view-state derivation: projection, colors, and scene building.
 *
 * Everything here is a deterministic function of the service's dataset,
 * snapshot, and pending ticket, so a full refresh reproduces the identical
 * view.
 */

import type { DatasetPoint, Snapshot, Ticket } from "./api.js";

export type Answer = 1 | 0 | -1;

/** Project m-dimensional coordinates to the plane: identity for m=2, first
 * two coordinates for m>2, zero-padded y for m=1. */
export function project(coords: number[]): [number, number] {
  if (coords.length === 0) {
    throw new Error("empty coordinate vector");
  }
  if (coords.length === 1) {
    return [coords[0], 0];
  }
  return [coords[0], coords[1]];
}

/** Stable per-label colors; label 0 (unassigned) is gray. */
const PALETTE = [
  "#4269d0", "#efb118", "#ff725c", "#6cc5b0", "#3ca951",
  "#ff8ab7", "#a463f2", "#97bbf5", "#9c6b4e", "#9498a0",
];

export function colorFor(label: number): string {
  if (label === 0) {
    return "#c8c8c8";
  }
  return PALETTE[(label - 1) % PALETTE.length];
}

export function answerForKey(key: string): Answer | null {
  switch (key.toLowerCase()) {
    case "y":
      return 1;
    case "u":
      return 0;
    case "n":
      return -1;
    default:
      return null;
  }
}

export interface ScenePoint {
  id: number;
  x: number;
  y: number;
  label: number;
  color: string;
  pending: boolean;
}

export interface SceneCenter {
  label: number;
  x: number;
  y: number;
  radius: number | null;
  color: string;
}

export interface Scene {
  points: ScenePoint[];
  centers: SceneCenter[];
  pendingPair: [number, number] | null;
  progress: string;
  finished: boolean;
  bounds: { minX: number; maxX: number; minY: number; maxY: number };
}

export function buildScene(
  points: DatasetPoint[],
  snapshot: Snapshot | null,
  ticket: Ticket | null,
): Scene {
  const labels = snapshot ? snapshot.labels : {};
  const pendingIds = new Set<number>(ticket ? [ticket.x.id, ticket.y.id] : []);
  const scenePoints: ScenePoint[] = points.map((p) => {
    const [x, y] = project(p.coords);
    const label = labels[String(p.id)] ?? 0;
    return { id: p.id, x, y, label, color: colorFor(label), pending: pendingIds.has(p.id) };
  });
  const centers: SceneCenter[] = [];
  if (snapshot) {
    for (const [labelStr, coords] of Object.entries(snapshot.centers)) {
      const [x, y] = project(coords);
      const label = Number(labelStr);
      centers.push({ label, x, y, radius: snapshot.radii[labelStr] ?? null, color: colorFor(label) });
    }
    centers.sort((a, b) => a.label - b.label);
  }
  const xs = scenePoints.map((p) => p.x);
  const ys = scenePoints.map((p) => p.y);
  const bounds = {
    minX: Math.min(...xs),
    maxX: Math.max(...xs),
    minY: Math.min(...ys),
    maxY: Math.max(...ys),
  };
  let progress = "no session";
  let finished = false;
  if (snapshot) {
    finished = snapshot.finished;
    progress = finished
      ? `finished after ${snapshot.queries} queries`
      : `iteration ${snapshot.iteration} of ${snapshot.k}, phase ${snapshot.phase}, ` +
        `${snapshot.queries} queries so far`;
  }
  return {
    points: scenePoints,
    centers,
    pendingPair: ticket ? [ticket.x.id, ticket.y.id] : null,
    progress,
    finished,
  bounds,
  };
}
