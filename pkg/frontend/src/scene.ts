// Scene building: a frame plus the current config becomes a display list in
// the virtual coordinate space of the scenario camera (the pipeline's
// image_size). Keeping this pure makes anchor placement testable without a
// canvas; painting happens in render.ts.

import { ConfigUpdate, FrameMessage, OverlayTemplate } from "./protocol.js";

export interface Viewport {
  width: number;
  height: number;
}

export interface GridItem {
  kind: "grid";
  spacing: number;
}

export interface BoxItem {
  kind: "box";
  driverId: number;
  trackId: number;
  x: number;
  y: number;
  w: number;
  h: number;
  opacity: number;
  coasting: boolean;
}

export interface LabelItem {
  kind: "label";
  driverId: number;
  templateId: number;
  text: string;
  u: number;
  v: number;
  color: string;
  opacity: number;
}

export type SceneItem = GridItem | BoxItem | LabelItem;

const COASTING_OPACITY = 0.5;

function cssColor(color: [number, number, number]): string {
  return `rgb(${color[0]},${color[1]},${color[2]})`;
}

export function buildScene(
  frame: FrameMessage | null,
  config: ConfigUpdate,
  viewport: Viewport,
): SceneItem[] {
  const items: SceneItem[] = [{ kind: "grid", spacing: Math.round(viewport.width / 16) }];
  if (frame === null) {
    return items;
  }
  const templates = new Map<number, OverlayTemplate>();
  for (const template of config.templates) {
    templates.set(template.template_id, template);
  }
  for (const track of frame.tracks) {
    const coasting = track.state === "coasting";
    const opacity = coasting ? COASTING_OPACITY : 1.0;
    const [x0, y0, x1, y1] = track.bbox;
    items.push({
      kind: "box",
      driverId: track.driver_id,
      trackId: track.track_id,
      x: x0,
      y: y0,
      w: x1 - x0,
      h: y1 - y0,
      opacity,
      coasting,
    });
    for (const anchor of track.anchors) {
      const template = templates.get(anchor.template_id);
      if (template === undefined || !template.enabled) {
        continue;
      }
      items.push({
        kind: "label",
        driverId: track.driver_id,
        templateId: anchor.template_id,
        text: template.label,
        u: anchor.u,
        v: anchor.v,
        color: cssColor(template.color),
        opacity,
      });
    }
  }
  return items;
}
