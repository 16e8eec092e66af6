import type { RpcClient } from './rpc.js';
import type { Diagnostic } from './protocol.js';
import { clear, el } from './dom.js';

const DEFAULT_DEBOUNCE_MS = 1500;

/**
 * File buffers, tabs, and the typing pipeline: edits accumulate locally and
 * a single source.update goes out once the user has been quiet for the
 * debounce window. A checkout response replaces every buffer wholesale.
 */
export class Editor {
  readonly root: HTMLElement;

  private buffers = new Map<string, string>();
  private activeFile: string | null = null;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private tabBar: HTMLElement;
  private textarea: HTMLTextAreaElement;
  private output: HTMLElement;

  constructor(
    private readonly client: RpcClient,
    private readonly sessionId: string,
    private readonly debounceMs: number = DEFAULT_DEBOUNCE_MS,
  ) {
    this.tabBar = el('div', { class: 'tabs' });
    this.textarea = el('textarea', { class: 'buffer', spellcheck: 'false' });
    this.output = el('pre', { class: 'compiler-output' });
    this.root = el('div', { class: 'editor' }, this.tabBar, this.textarea, this.output);

    this.textarea.addEventListener('input', () => {
      if (this.activeFile === null) return;
      this.edit(this.activeFile, this.textarea.value);
    });
  }

  files(): Record<string, string> {
    return Object.fromEntries(this.buffers);
  }

  get active(): string | null {
    return this.activeFile;
  }

  /** Record a keystroke's worth of change and (re)arm the quiet timer. */
  edit(path: string, text: string): void {
    this.buffers.set(path, text);
    if (this.activeFile === null) this.activeFile = path;
    this.renderTabs();
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.flush();
    }, this.debounceMs);
  }

  /** Push the current buffers now, regardless of the timer. */
  flush(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    void this.client.call('source.update', {
      sessionId: this.sessionId,
      files: this.files(),
    });
  }

  /** Replace all buffers (checkout result or session restore). */
  setFiles(files: Record<string, string>): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null; // a checkout supersedes anything half-typed
    }
    this.buffers = new Map(Object.entries(files));
    const names = [...this.buffers.keys()].sort();
    if (this.activeFile === null || !this.buffers.has(this.activeFile)) {
      this.activeFile = names[0] ?? null;
    }
    this.renderTabs();
    this.renderBuffer();
  }

  selectTab(path: string): void {
    if (!this.buffers.has(path)) return;
    this.activeFile = path;
    this.renderTabs();
    this.renderBuffer();
  }

  showDiagnostics(diagnostics: Diagnostic[]): void {
    clear(this.output);
    this.output.classList.toggle('has-errors', diagnostics.length > 0);
    for (const d of diagnostics) {
      this.output.append(
        el('div', { class: 'diagnostic' }, `${d.file}:${d.line}:${d.col}: ${d.message}`),
      );
    }
  }

  clearDiagnostics(): void {
    this.showDiagnostics([]);
  }

  private renderTabs(): void {
    clear(this.tabBar);
    for (const name of [...this.buffers.keys()].sort()) {
      const tab = el('button', { class: 'tab', 'data-file': name }, name);
      if (name === this.activeFile) tab.classList.add('active');
      tab.addEventListener('click', () => this.selectTab(name));
      this.tabBar.append(tab);
    }
  }

  private renderBuffer(): void {
    this.textarea.value =
      this.activeFile !== null ? this.buffers.get(this.activeFile) ?? '' : '';
  }
}
