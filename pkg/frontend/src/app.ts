import type {
  CheckoutResult,
  CompileFailed,
  CompileSucceeded,
  ImageReady,
  ImageResult,
  OpenResult,
  TreePayload,
  TreeChanged,
} from './protocol.js';
import type { RpcClient } from './rpc.js';
import { clear, el } from './dom.js';
import { Editor } from './editor.js';
import { DiffTooltip } from './tooltip.js';
import { LiveView } from './liveview.js';
import { renderMetaVis } from './tree.js';

export interface AppOptions {
  debounceMs?: number;
  latestAtTop?: boolean;
}

export interface BootOptions extends AppOptions {
  client: RpcClient;
  root: HTMLElement;
  /** Resume this session instead of opening a new one. */
  sessionId?: string;
  toolchainId?: string;
  width?: number;
  height?: number;
}

function currentImageRef(payload: TreePayload): string | null {
  const current = payload.branch.current;
  if (current === null) return null;
  for (const row of payload.branch.rows) {
    if (row.kind === 'revision') {
      if (row.id === current) return row.imageRef;
    } else {
      const i = row.members.indexOf(current);
      if (i >= 0) return row.imageRefs[i];
    }
  }
  return null;
}

/**
 * Wires the panels together around one session. Holds no authoritative
 * state: everything on screen is reconstructed from view.tree, checkout
 * responses, and pushed notifications, which is what makes reloads safe.
 */
export class App {
  readonly editor: Editor;
  readonly tooltip: DiffTooltip;
  readonly liveView: LiveView;
  readonly treePane: HTMLElement;

  tree: TreePayload | null = null;
  hovered: string | null = null;
  latestAtTop: boolean;
  tooltipBackward = false;

  private readonly imageCache = new Map<string, string>();
  private readonly unsubscribe: (() => void)[] = [];

  constructor(
    private readonly client: RpcClient,
    readonly sessionId: string,
    private readonly root: HTMLElement,
    opts: AppOptions = {},
  ) {
    this.latestAtTop = opts.latestAtTop ?? false;
    this.editor = new Editor(client, sessionId, opts.debounceMs);
    this.tooltip = new DiffTooltip(client, sessionId);
    this.liveView = new LiveView(client, sessionId, (ref, img) => this.loadImage(ref, img));
    this.treePane = el('div', { class: 'tree-pane' });

    const orderToggle = el('button', { class: 'order-toggle' }, 'newest first');
    orderToggle.addEventListener('click', () => {
      this.latestAtTop = !this.latestAtTop;
      orderToggle.classList.toggle('on', this.latestAtTop);
      this.renderTree();
    });
    const directionToggle = el('button', { class: 'tooltip-direction-toggle' }, 'flip diffs');
    directionToggle.addEventListener('click', () => {
      this.tooltipBackward = !this.tooltipBackward;
      directionToggle.classList.toggle('on', this.tooltipBackward);
    });

    clear(root);
    root.append(
      el('div', { class: 'toolbar' }, orderToggle, directionToggle),
      el('div', { class: 'panels' },
        this.treePane, this.editor.root, this.liveView.root),
      this.tooltip.root,
    );

    const mine = <T extends { sessionId: string }>(fn: (p: T) => void) =>
      (params: unknown) => {
        const p = params as T;
        if (p && p.sessionId === this.sessionId) fn(p);
      };
    this.unsubscribe.push(
      client.on('tree.changed', mine<TreeChanged>(() => void this.refresh())),
      client.on('compile.succeeded', mine<CompileSucceeded>(() => this.editor.clearDiagnostics())),
      client.on('compile.failed', mine<CompileFailed>((p) => this.editor.showDiagnostics(p.diagnostics))),
      client.on('image.ready', mine<ImageReady>((p) => this.onImageReady(p))),
    );
  }

  /** Open a fresh session, or rebuild the whole view of an existing one. */
  static async boot(opts: BootOptions): Promise<App> {
    let sessionId = opts.sessionId;
    if (sessionId === undefined) {
      const result = await opts.client.call<OpenResult>('session.open', {
        toolchainId: opts.toolchainId ?? 'minivis',
        width: opts.width ?? 256,
        height: opts.height ?? 256,
      });
      sessionId = result.sessionId;
    }
    const app = new App(opts.client, sessionId, opts.root, opts);
    await app.refresh();
    if (app.tree !== null && app.tree.branch.current !== null) {
      // also repopulates the editor from the server-held snapshot
      await app.select(app.tree.branch.current);
    }
    return app;
  }

  async refresh(): Promise<void> {
    this.tree = await this.client.call<TreePayload>('view.tree', {
      sessionId: this.sessionId,
    });
    this.renderTree();
    const ref = currentImageRef(this.tree);
    if (ref !== null && this.hovered === null) this.liveView.showRef(ref);
  }

  async select(revisionId: string): Promise<void> {
    const result = await this.client.call<CheckoutResult>('state.checkout', {
      sessionId: this.sessionId,
      revisionId,
    });
    this.editor.setFiles(result.files);
    await this.refresh();
  }

  async setExpanded(groupId: string, expanded: boolean): Promise<void> {
    await this.client.call('view.expand', {
      sessionId: this.sessionId,
      groupId,
      expanded,
    });
    // the server answers with tree.changed, which re-renders
  }

  private renderTree(): void {
    if (this.tree === null) return;
    clear(this.treePane);
    this.treePane.append(renderMetaVis(this.tree, {
      onSelect: (rid) => void this.select(rid),
      onExpand: (gid, expanded) => void this.setExpanded(gid, expanded),
      onHoverImage: (rid, anchor) => this.hoverImage(rid, anchor),
      onUnhoverImage: () => this.unhoverImage(),
      resolveImage: (ref, img) => this.loadImage(ref, img),
    }, { latestAtTop: this.latestAtTop }));
  }

  private hoverImage(revisionId: string, anchor: HTMLElement): void {
    this.hovered = revisionId;
    const current = this.tree?.branch.current;
    if (current && current !== revisionId) {
      void this.tooltip.show(
        this.tooltipBackward ? revisionId : current,
        this.tooltipBackward ? current : revisionId,
      );
    }
    const ref = anchor.getAttribute('data-ref');
    if (ref !== null) this.liveView.showRef(ref); // hovered result replaces the pane
  }

  private unhoverImage(): void {
    this.hovered = null;
    this.tooltip.hide();
    if (this.tree !== null) {
      const ref = currentImageRef(this.tree);
      if (ref !== null) this.liveView.showRef(ref);
    }
  }

  private onImageReady(p: ImageReady): void {
    this.imageCache.delete(p.ref);
    for (const img of this.root.querySelectorAll<HTMLImageElement>(
      `img[data-rev="${p.revisionId}"]`,
    )) {
      img.setAttribute('data-ref', p.ref);
      this.loadImage(p.ref, img);
    }
    if (this.tree !== null && p.revisionId === this.tree.branch.current
        && this.hovered === null) {
      this.liveView.showRef(p.ref);
    }
  }

  private loadImage(ref: string, img: HTMLImageElement): void {
    const cached = this.imageCache.get(ref);
    if (cached !== undefined) {
      img.src = cached;
      img.classList.remove('unavailable');
      return;
    }
    this.client
      .call<ImageResult>('image.get', { sessionId: this.sessionId, ref })
      .then((result) => {
        const url = `data:image/png;base64,${result.png}`;
        if (this.imageCache.size > 128) {
          const oldest = this.imageCache.keys().next().value;
          if (oldest !== undefined) this.imageCache.delete(oldest);
        }
        this.imageCache.set(ref, url);
        if (img.getAttribute('data-ref') === ref) { // still showing what we asked for
          img.src = url;
          img.classList.remove('unavailable');
        }
      })
      .catch(() => img.classList.add('unavailable'));
  }

  destroy(): void {
    for (const unsub of this.unsubscribe) unsub();
    clear(this.root);
  }
}
