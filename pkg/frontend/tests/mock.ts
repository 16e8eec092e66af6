// In-memory stand-in for the session server, speaking the same JSON-RPC
// surface over a loopback transport. State layout mirrors the real thing
// (revision chain, compression into equal-structure groups, branch rows,
// param generations) at fixture scale, so the UI cannot tell the difference.

import type { Transport } from '../src/rpc.js';
import type {
  BranchRow,
  DiffHunk,
  DiffOp,
  FileDiff,
  GroupJson,
  ParamValue,
  TreePayload,
} from '../src/protocol.js';

// 1x1 PNGs; the UI only ever feeds these into data: URLs
const RESULT_PNG =
  'iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8z8BQDwAEhQGAhKmMIQAAAABJRU5ErkJggg==';
const VARIANCE_PNG =
  'iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mNgYGD4DwABBAEAX+XBlwAAAABJRU5ErkJggg==';

export interface MockRevision {
  id: string;
  parent: string | null;
  seq: number;
  sstHash: string;
  files: Record<string, string>;
}

export interface MockSession {
  id: string;
  revisions: MockRevision[];
  current: string | null;
  expanded: Set<string>;
  generation: number;
  params: Record<string, ParamValue>;
  nextSeq: number;
}

interface RpcMessage {
  jsonrpc?: string;
  id?: number | string | null;
  method?: string;
  params?: Record<string, unknown>;
}

function hashString(text: string): string {
  let h = 5381;
  for (let i = 0; i < text.length; i++) {
    h = ((h << 5) + h + text.charCodeAt(i)) >>> 0;
  }
  return h.toString(16).padStart(8, '0');
}

/** Brace skeleton across all files: structural identity, nothing else. */
function sstHashOf(files: Record<string, string>): string {
  const skeleton = Object.keys(files)
    .sort()
    .map((path) => path + '|' + files[path].replace(/[^{}]/g, ''))
    .join(';');
  return hashString(skeleton);
}

function lcsOps(a: string[], b: string[]): DiffOp[] {
  const n = a.length;
  const m = b.length;
  const table: number[][] = Array.from({ length: n + 1 }, () =>
    new Array<number>(m + 1).fill(0));
  for (let i = n - 1; i >= 0; i--) {
    for (let j = m - 1; j >= 0; j--) {
      table[i][j] = a[i] === b[j]
        ? table[i + 1][j + 1] + 1
        : Math.max(table[i + 1][j], table[i][j + 1]);
    }
  }
  const ops: DiffOp[] = [];
  let i = 0;
  let j = 0;
  while (i < n && j < m) {
    if (a[i] === b[j]) {
      ops.push(['keep', a[i]]);
      i++;
      j++;
    } else if (table[i + 1][j] >= table[i][j + 1]) {
      ops.push(['remove', a[i]]);
      i++;
    } else {
      ops.push(['add', b[j]]);
      j++;
    }
  }
  while (i < n) ops.push(['remove', a[i++]]);
  while (j < m) ops.push(['add', b[j++]]);
  return ops;
}

function splitLines(text: string): string[] {
  if (text === '') return [];
  const body = text.endsWith('\n') ? text.slice(0, -1) : text;
  return body.split('\n');
}

function fileDiff(path: string, from: string | undefined,
                  to: string | undefined): FileDiff {
  const a = splitLines(from ?? '');
  const b = splitLines(to ?? '');
  const status = from === undefined ? 'added'
    : to === undefined ? 'deleted'
    : from === to ? 'unchanged' : 'modified';
  const hunk: DiffHunk = {
    fromStart: 1,
    fromLen: a.length,
    toStart: 1,
    toLen: b.length,
    ops: status === 'unchanged' ? a.map((l) => ['keep', l]) : lcsOps(a, b),
  };
  return {
    path,
    status,
    fromTrailingNewline: (from ?? '\n').endsWith('\n'),
    toTrailingNewline: (to ?? '\n').endsWith('\n'),
    hunks: a.length === 0 && b.length === 0 ? [] : [hunk],
  };
}

function isFloat(v: unknown): v is number {
  return typeof v === 'number' && Number.isFinite(v);
}

function isVec3(v: unknown): v is [number, number, number] {
  return Array.isArray(v) && v.length === 3 && v.every(isFloat);
}

class LoopbackTransport implements Transport {
  private messageHandler: ((text: string) => void) | null = null;
  private closeHandler: (() => void) | null = null;
  private open = true;

  constructor(private readonly server: MockServer) {}

  send(text: string): void {
    if (!this.open) return;
    queueMicrotask(() => this.server.handle(text, this));
  }

  deliver(text: string): void {
    if (!this.open) return;
    queueMicrotask(() => this.messageHandler?.(text));
  }

  onMessage(handler: (text: string) => void): void {
    this.messageHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.open = false;
    this.server.disconnect(this);
    this.closeHandler?.();
  }
}

export class MockServer {
  /** Every request that reached the server, in arrival order. */
  readonly calls: { method: string; params: Record<string, unknown> }[] = [];
  readonly sessions = new Map<string, MockSession>();

  private readonly transports = new Set<LoopbackTransport>();
  private nextSession = 1;

  connect(): Transport {
    const t = new LoopbackTransport(this);
    this.transports.add(t);
    return t;
  }

  disconnect(t: LoopbackTransport): void {
    this.transports.delete(t as LoopbackTransport);
  }

  callsTo(method: string): Record<string, unknown>[] {
    return this.calls.filter((c) => c.method === method).map((c) => c.params);
  }

  /** Plant a ready-made revision chain without going through compiles. */
  seed(sessionId: string,
       revs: { files: Record<string, string>; parent?: string | null }[]): string[] {
    const session = this.mustSession(sessionId);
    const ids: string[] = [];
    for (const entry of revs) {
      const seq = session.nextSeq++;
      const id = `rev${seq}-${hashString(JSON.stringify(entry.files))}`;
      session.revisions.push({
        id,
        parent: entry.parent === undefined
          ? session.revisions[session.revisions.length - 1]?.id ?? null
          : entry.parent,
        seq,
        sstHash: sstHashOf(entry.files),
        files: { ...entry.files },
      });
      ids.push(id);
      session.current = id;
    }
    return ids;
  }

  openSession(): MockSession {
    const id = `mock-${this.nextSession++}`;
    const session: MockSession = {
      id,
      revisions: [],
      current: null,
      expanded: new Set(),
      generation: 0,
      params: {},
      nextSeq: 0,
    };
    this.sessions.set(id, session);
    return session;
  }

  private mustSession(id: unknown): MockSession {
    const session = typeof id === 'string' ? this.sessions.get(id) : undefined;
    if (!session) throw rpcError(-32002, `no session ${String(id)}`);
    return session;
  }

  // -- payload derivation (same rules as the real view) --

  private groupsOf(session: MockSession): GroupJson[] {
    const revs = [...session.revisions].sort((a, b) => a.seq - b.seq);
    const byId = new Map(revs.map((r) => [r.id, r]));
    const groupOf = new Map<string, string>();
    const members = new Map<string, string[]>();
    for (const rev of revs) {
      const parent = rev.parent !== null ? byId.get(rev.parent) : undefined;
      let gid: string;
      if (parent && parent.sstHash === rev.sstHash) {
        gid = groupOf.get(parent.id)!;
      } else {
        gid = rev.id;
        members.set(gid, []);
      }
      groupOf.set(rev.id, gid);
      members.get(gid)!.push(rev.id);
    }
    const children = new Map<string, string[]>();
    for (const gid of members.keys()) children.set(gid, []);
    for (const rev of revs) {
      const parent = rev.parent !== null ? byId.get(rev.parent) : undefined;
      if (parent && groupOf.get(parent.id) !== groupOf.get(rev.id)) {
        children.get(groupOf.get(parent.id)!)!.push(groupOf.get(rev.id)!);
      }
    }
    const seqOf = (gid: string) => byId.get(gid)!.seq;
    return [...members.keys()]
      .sort((a, b) => seqOf(a) - seqOf(b))
      .map((gid) => ({
        id: gid,
        members: members.get(gid)!,
        sstHash: byId.get(gid)!.sstHash,
        children: children.get(gid)!.sort((a, b) => seqOf(a) - seqOf(b)),
        collapsed: members.get(gid)!.length > 1 && !session.expanded.has(gid),
      }));
  }

  private branchPath(session: MockSession, head: string): string[] {
    const byId = new Map(session.revisions.map((r) => [r.id, r]));
    const path: string[] = [];
    let cursor: string | null = head;
    while (cursor !== null) {
      path.push(cursor);
      cursor = byId.get(cursor)?.parent ?? null;
    }
    return path.reverse();
  }

  treePayload(session: MockSession): TreePayload {
    const groups = this.groupsOf(session);
    const head = session.current;
    if (head === null) {
      return {
        groups,
        branch: { head: null, rows: [], current: null, colors: {}, collapsedGroups: [] },
      };
    }
    const path = this.branchPath(session, head);
    const onBranch = new Set(path);
    const gen = session.generation;
    const byGroup = new Map(groups.flatMap((g) => g.members.map((m) => [m, g] as const)));

    const rows: BranchRow[] = [];
    const seen = new Set<string>();
    for (const rid of path) {
      const group = byGroup.get(rid)!;
      if (seen.has(group.id)) continue;
      seen.add(group.id);
      const branchMembers = group.members.filter((m) => onBranch.has(m));
      if (group.collapsed) {
        rows.push({
          kind: 'group',
          id: group.id,
          members: branchMembers,
          imageRefs: branchMembers.map((m) => `${m}:${gen}`),
          sstHash: group.sstHash,
          varianceRef: branchMembers.length >= 2 ? `g${group.id}:${gen}` : null,
          collapsed: true,
        });
      } else {
        for (const member of branchMembers) {
          rows.push({
            kind: 'revision',
            id: member,
            groupId: group.id,
            imageRef: `${member}:${gen}`,
            sstHash: group.sstHash,
          });
        }
      }
    }
    const colors: Record<string, 'blue' | 'grey'> = {};
    for (const rev of session.revisions) {
      colors[rev.id] = onBranch.has(rev.id) ? 'blue' : 'grey';
    }
    return {
      groups,
      branch: {
        head,
        rows,
        current: session.current,
        colors,
        collapsedGroups: groups.filter((g) => g.collapsed).map((g) => g.id),
      },
    };
  }

  // -- dispatch --

  handle(text: string, from: LoopbackTransport): void {
    const msg = JSON.parse(text) as RpcMessage;
    const params = (msg.params ?? {}) as Record<string, unknown>;
    if (msg.method !== undefined) this.calls.push({ method: msg.method, params });
    let result: unknown;
    const after: { method: string; params: unknown }[] = [];
    try {
      result = this.invoke(msg.method ?? '', params, after);
    } catch (err) {
      if (msg.id !== undefined && msg.id !== null) {
        const e = err as { code?: number; message?: string };
        from.deliver(JSON.stringify({
          jsonrpc: '2.0',
          id: msg.id,
          error: { code: e.code ?? -32000, message: e.message ?? 'internal error' },
        }));
      }
      return;
    }
    if (msg.id !== undefined && msg.id !== null) {
      from.deliver(JSON.stringify({ jsonrpc: '2.0', id: msg.id, result }));
    }
    for (const note of after) {
      const frame = JSON.stringify({ jsonrpc: '2.0', method: note.method, params: note.params });
      for (const t of this.transports) t.deliver(frame);
    }
  }

  private invoke(method: string, params: Record<string, unknown>,
                 after: { method: string; params: unknown }[]): unknown {
    switch (method) {
      case 'session.open': {
        const session = this.openSession();
        return { sessionId: session.id };
      }
      case 'session.close': {
        const session = this.mustSession(params.sessionId);
        this.sessions.delete(session.id);
        return { ok: true };
      }
      case 'source.update':
        return this.update(this.mustSession(params.sessionId),
                           params.files as Record<string, string>, after);
      case 'state.checkout': {
        const session = this.mustSession(params.sessionId);
        const rev = session.revisions.find((r) => r.id === params.revisionId);
        if (!rev) throw rpcError(-32003, `unknown revision ${String(params.revisionId)}`);
        const moved = session.current !== rev.id;
        session.current = rev.id;
        if (moved) after.push({ method: 'tree.changed', params: { sessionId: session.id } });
        return { files: { ...rev.files } };
      }
      case 'view.tree':
        return this.treePayload(this.mustSession(params.sessionId));
      case 'diff.get': {
        const session = this.mustSession(params.sessionId);
        const find = (id: unknown) => {
          const rev = session.revisions.find((r) => r.id === id);
          if (!rev) throw rpcError(-32003, `unknown revision ${String(id)}`);
          return rev;
        };
        let a = find(params.fromRev);
        let b = find(params.toRev);
        if (params.direction === 'backward') [a, b] = [b, a];
        const paths = [...new Set([...Object.keys(a.files), ...Object.keys(b.files)])].sort();
        return { diffs: paths.map((p) => fileDiff(p, a.files[p], b.files[p])) };
      }
      case 'params.set': {
        const session = this.mustSession(params.sessionId);
        const values = params.values as Record<string, unknown>;
        for (const [name, value] of Object.entries(values)) {
          if (!isFloat(value) && !isVec3(value)) {
            throw rpcError(-32004, `value for ${name} is neither float nor vec3`);
          }
          session.params[name] = value as ParamValue;
        }
        session.generation++;
        if (session.current !== null) {
          const newestFirst = this.branchPath(session, session.current).reverse();
          for (const rid of newestFirst) {
            after.push({
              method: 'image.ready',
              params: {
                sessionId: session.id,
                revisionId: rid,
                ref: `${rid}:${session.generation}`,
                paramGen: session.generation,
              },
            });
          }
        }
        return { generation: session.generation };
      }
      case 'image.get': {
        const session = this.mustSession(params.sessionId);
        const ref = String(params.ref);
        const variance = ref.startsWith('g');
        const body = variance ? ref.slice(1) : ref;
        const sep = body.lastIndexOf(':');
        const ident = body.slice(0, sep);
        const gen = Number(body.slice(sep + 1));
        const genOk = gen === session.generation || gen === session.generation - 1;
        if (variance) {
          const group = this.groupsOf(session).find((g) => g.id === ident);
          const path = session.current !== null
            ? new Set(this.branchPath(session, session.current)) : new Set();
          const contributors = group?.members.filter((m) => path.has(m)) ?? [];
          if (!group || contributors.length < 2 || !genOk) {
            throw rpcError(-32005, `unknown image ${ref}`);
          }
          return { ref, png: VARIANCE_PNG };
        }
        if (!session.revisions.some((r) => r.id === ident) || !genOk) {
          throw rpcError(-32005, `unknown image ${ref}`);
        }
        return { ref, png: RESULT_PNG };
      }
      case 'view.expand': {
        const session = this.mustSession(params.sessionId);
        const gid = String(params.groupId);
        if (!this.groupsOf(session).some((g) => g.id === gid)) {
          throw rpcError(-32006, `unknown group ${gid}`);
        }
        if (params.expanded) session.expanded.add(gid);
        else session.expanded.delete(gid);
        after.push({ method: 'tree.changed', params: { sessionId: session.id } });
        return { ok: true };
      }
      default:
        throw rpcError(-32601, `unknown method ${method}`);
    }
  }

  private update(session: MockSession, files: Record<string, string>,
                 after: { method: string; params: unknown }[]): unknown {
    const sid = session.id;
    // the marker makes broken fixtures explicit without a real compiler
    const broken = Object.entries(files).find(([, text]) => text.includes('BROKEN'));
    if (broken) {
      after.push({
        method: 'compile.failed',
        params: {
          sessionId: sid,
          diagnostics: [{
            file: broken[0], line: 1, col: 1, message: 'SyntaxError: broken fixture',
          }],
        },
      });
      return { ok: true };
    }
    const parent = session.revisions.find((r) => r.id === session.current);
    let rid: string;
    if (parent && JSON.stringify(parent.files) === JSON.stringify(files)) {
      rid = parent.id; // unchanged source re-resolves to the same revision
    } else {
      [rid] = this.seed(sid, [{ files, parent: session.current }]);
      after.push({ method: 'tree.changed', params: { sessionId: sid } });
    }
    after.unshift({
      method: 'compile.succeeded',
      params: { sessionId: sid, revisionId: rid },
    });
    after.push({
      method: 'image.ready',
      params: {
        sessionId: sid,
        revisionId: rid,
        ref: `${rid}:${session.generation}`,
        paramGen: session.generation,
      },
    });
    return { ok: true };
  }
}

function rpcError(code: number, message: string): { code: number; message: string } {
  return { code, message };
}

/** Drain the microtask relay a few hops deep. */
export async function flush(hops = 30): Promise<void> {
  for (let i = 0; i < hops; i++) await Promise.resolve();
}
