/** SVG scatter rendering. No framework: the scene is redrawn from scratch on
 * every update, which keeps the view a pure function of the model. */

import type { Scene } from "./model.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const VIEW = 640;
const MARGIN = 30;

function el(name: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS(SVG_NS, name);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

export function renderScene(svg: SVGSVGElement, scene: Scene): void {
  svg.innerHTML = "";
  svg.setAttribute("viewBox", `0 0 ${VIEW} ${VIEW}`);
  const { minX, maxX, minY, maxY } = scene.bounds;
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const span = Math.max(spanX, spanY);
  const scale = (VIEW - 2 * MARGIN) / span;
  const sx = (x: number) => MARGIN + (x - minX) * scale;
  const sy = (y: number) => VIEW - MARGIN - (y - minY) * scale;

  for (const center of scene.centers) {
    if (center.radius !== null) {
      svg.appendChild(
        el("circle", {
          cx: sx(center.x),
          cy: sy(center.y),
          r: center.radius * scale,
          fill: "none",
          stroke: center.color,
          "stroke-dasharray": "6 4",
          "stroke-width": 1.5,
          opacity: 0.8,
        }),
      );
    }
  }

  if (scene.pendingPair) {
    const [aId, bId] = scene.pendingPair;
    const a = scene.points.find((p) => p.id === aId);
    const b = scene.points.find((p) => p.id === bId);
    if (a && b) {
      svg.appendChild(
        el("line", {
          x1: sx(a.x), y1: sy(a.y), x2: sx(b.x), y2: sy(b.y),
          stroke: "#222", "stroke-width": 2, "stroke-dasharray": "4 3",
        }),
      );
    }
  }

  for (const point of scene.points) {
    const node = el("circle", {
      cx: sx(point.x),
      cy: sy(point.y),
      r: point.pending ? 9 : 5,
      fill: point.color,
      stroke: point.pending ? "#111" : "#666",
      "stroke-width": point.pending ? 3 : 0.5,
    });
    if (point.pending) {
      node.setAttribute("class", "pending-point");
    }
    svg.appendChild(node);
  }

  // estimated centers as triangles, drawn last so they stay visible
  for (const center of scene.centers) {
    const cx = sx(center.x);
    const cy = sy(center.y);
    svg.appendChild(
      el("polygon", {
        points: `${cx},${cy - 8} ${cx - 7},${cy + 6} ${cx + 7},${cy + 6}`,
        fill: "#ffffff",
        stroke: "#111",
        "stroke-width": 1.5,
      }),
    );
  }
}
