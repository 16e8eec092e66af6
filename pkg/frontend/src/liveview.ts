import type { RpcClient } from './rpc.js';
import type { SetParamsResult } from './protocol.js';
import { arcball, cameraToParams, pan, zoom, DEFAULT_CAMERA, type Camera } from './camera.js';
import { el } from './dom.js';

/**
 * The enlarged result pane with direct camera interaction: primary drag
 * orbits (arcball), middle drag pans, the wheel zooms. Every gesture turns
 * into a params.set carrying the reserved camera names; programs that do
 * not declare them simply render unchanged.
 *
 * The camera here is only the gizmo state. The authoritative values live in
 * the session's parameter set on the server, so a reload neither loses nor
 * overwrites them — nothing is sent until the user actually drags.
 */
export class LiveView {
  readonly root: HTMLElement;
  readonly image: HTMLImageElement;
  camera: Camera = { ...DEFAULT_CAMERA };

  private dragButton: number | null = null;
  private last: [number, number] = [0, 0];
  private moved = false;
  private inFlight = false;
  private dirty = false;

  constructor(
    private readonly client: RpcClient,
    private readonly sessionId: string,
    private readonly resolveImage: (ref: string, img: HTMLImageElement) => void,
    private readonly fallbackSize = 256,
  ) {
    this.image = el('img', { class: 'live-image', draggable: 'false', alt: 'live view' });
    this.root = el('div', { class: 'live-view' }, this.image);

    this.root.addEventListener('mousedown', (e) => this.beginDrag(e));
    this.root.addEventListener('mousemove', (e) => this.drag(e));
    this.root.addEventListener('mouseup', () => this.endDrag());
    this.root.addEventListener('mouseleave', () => this.endDrag());
    this.root.addEventListener('wheel', (e) => {
      e.preventDefault();
      this.camera = zoom(this.camera, e.deltaY < 0 ? 1.1 : 1 / 1.1);
      this.push();
    });
  }

  /** Point the pane at a new image ref (current revision, current gen). */
  showRef(ref: string): void {
    this.image.setAttribute('data-ref', ref);
    this.resolveImage(ref, this.image);
  }

  private norm(e: MouseEvent): [number, number] {
    const rect = this.root.getBoundingClientRect();
    const w = rect.width > 0 ? rect.width : this.fallbackSize;
    const h = rect.height > 0 ? rect.height : this.fallbackSize;
    // y flipped: screen grows downward, the arcball's sphere does not
    return [
      ((e.clientX - rect.left) / w) * 2 - 1,
      -(((e.clientY - rect.top) / h) * 2 - 1),
    ];
  }

  private beginDrag(e: MouseEvent): void {
    this.dragButton = e.button;
    this.last = this.norm(e);
    this.moved = false;
  }

  private drag(e: MouseEvent): void {
    if (this.dragButton === null) return;
    const point = this.norm(e);
    if (point[0] === this.last[0] && point[1] === this.last[1]) return;
    if (this.dragButton === 1) {
      this.camera = pan(this.camera,
                        -(point[0] - this.last[0]) / 2,
                        -(point[1] - this.last[1]) / 2);
    } else {
      this.camera = arcball(this.camera, this.last, point);
    }
    this.last = point;
    this.moved = true;
    this.push();
  }

  private endDrag(): void {
    if (this.dragButton === null) return;
    this.dragButton = null;
    if (this.moved) this.push(); // zero-length drags never reach the wire
  }

  /** Ship the camera triple, at most one request in flight. */
  private push(): void {
    if (this.inFlight) {
      this.dirty = true;
      return;
    }
    this.inFlight = true;
    this.dirty = false;
    this.client
      .call<SetParamsResult>('params.set', {
        sessionId: this.sessionId,
        values: cameraToParams(this.camera),
      })
      .catch(() => undefined)
      .finally(() => {
        this.inFlight = false;
        if (this.dirty) this.push();
      });
  }
}
