import type { RpcClient } from './rpc.js';
import type { DiffResult, FileDiff } from './protocol.js';
import { clear, el } from './dom.js';

/**
 * The hover tooltip over result images: remove/add lines between two
 * revisions, numbered on their own side. Only the newest hover wins — a
 * response for a hover the mouse already left is dropped on arrival.
 */
export class DiffTooltip {
  readonly root: HTMLElement;
  private requestSeq = 0;

  constructor(private readonly client: RpcClient,
              private readonly sessionId: string) {
    this.root = el('div', { class: 'diff-tooltip hidden' });
  }

  get visible(): boolean {
    return !this.root.classList.contains('hidden');
  }

  async show(fromRev: string, toRev: string): Promise<void> {
    const seq = ++this.requestSeq;
    this.root.classList.remove('hidden');
    clear(this.root);
    this.root.append(el('div', { class: 'loading' }, '…'));
    try {
      const result = await this.client.call<DiffResult>('diff.get', {
        sessionId: this.sessionId,
        fromRev,
        toRev,
      });
      if (seq !== this.requestSeq) return; // superseded by a newer hover
      this.render(result.diffs);
    } catch {
      if (seq !== this.requestSeq) return;
      clear(this.root);
      this.root.append(el('div', { class: 'fetch-failed' }, 'diff unavailable'));
    }
  }

  hide(): void {
    this.requestSeq++; // cancels any in-flight request's rendering
    this.root.classList.add('hidden');
    clear(this.root);
  }

  private render(diffs: FileDiff[]): void {
    clear(this.root);
    const changed = diffs.filter((d) => d.status !== 'unchanged');
    if (changed.length === 0) {
      this.root.append(el('div', { class: 'no-changes' }, 'no changes'));
      return;
    }
    for (const diff of changed) {
      const section = el('div', { class: 'diff-file' });
      section.append(el('div', { class: 'diff-path' }, `${diff.path} (${diff.status})`));
      for (const hunk of diff.hunks) {
        let fromLine = hunk.fromStart;
        let toLine = hunk.toStart;
        for (const [op, text] of hunk.ops) {
          if (op === 'keep') {
            fromLine++;
            toLine++;
            continue; // context stays out of the tooltip, numbers keep counting
          }
          const line = op === 'remove'
            ? el('div', { class: 'line remove' }, `-${fromLine++}  ${text}`)
            : el('div', { class: 'line add' }, `+${toLine++}  ${text}`);
          section.append(line);
        }
      }
      this.root.append(section);
    }
  }
}
