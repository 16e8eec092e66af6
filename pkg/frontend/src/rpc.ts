import type { RpcRequest, RpcResponse, RpcId } from './protocol.js';

/**
 * Anything that can carry JSON-RPC frames both ways. The browser client
 * wraps a WebSocket; tests plug in an in-memory loopback to a mock server.
 */
export interface Transport {
  send(text: string): void;
  onMessage(handler: (text: string) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

export class RpcCallError extends Error {
  constructor(public readonly code: number, message: string,
              public readonly data?: unknown) {
    super(message);
    this.name = 'RpcCallError';
  }
}

interface Pending {
  resolve: (value: unknown) => void;
  reject: (err: Error) => void;
}

type NotificationHandler = (params: unknown) => void;

/**
 * Request/response matching plus notification fan-out over one transport.
 *
 * The server pushes compile/image/tree events for every session this
 * connection has touched, so a client resumes a session simply by issuing
 * any request that names it (view.tree is the natural first call).
 */
export class RpcClient {
  private nextId = 1;
  private pending = new Map<RpcId, Pending>();
  private handlers = new Map<string, Set<NotificationHandler>>();
  private closed = false;

  constructor(private transport: Transport) {
    this.attach(transport);
  }

  /** Swap the underlying connection after a drop; pending calls fail fast. */
  replaceTransport(transport: Transport): void {
    this.transport = transport;
    this.closed = false;
    this.attach(transport);
  }

  private attach(transport: Transport): void {
    transport.onMessage((text) => this.dispatch(text));
    transport.onClose(() => {
      this.closed = true;
      const waiting = [...this.pending.values()];
      this.pending.clear();
      for (const p of waiting) p.reject(new Error('connection closed'));
    });
  }

  call<T>(method: string, params?: unknown): Promise<T> {
    if (this.closed) return Promise.reject(new Error('connection closed'));
    const id = this.nextId++;
    const req: RpcRequest = { jsonrpc: '2.0', id, method, params };
    return new Promise<T>((resolve, reject) => {
      this.pending.set(id, { resolve: resolve as (v: unknown) => void, reject });
      this.transport.send(JSON.stringify(req));
    });
  }

  /** Fire-and-forget request (no id, so the server sends no reply). */
  notify(method: string, params?: unknown): void {
    if (this.closed) return;
    this.transport.send(JSON.stringify({ jsonrpc: '2.0', method, params }));
  }

  on(method: string, handler: NotificationHandler): () => void {
    let set = this.handlers.get(method);
    if (!set) {
      set = new Set();
      this.handlers.set(method, set);
    }
    set.add(handler);
    return () => set.delete(handler);
  }

  close(): void {
    this.closed = true;
    this.transport.close();
  }

  private dispatch(text: string): void {
    let msg: RpcResponse & RpcRequest;
    try {
      msg = JSON.parse(text);
    } catch {
      return; // not ours to crash on
    }
    if (msg.id !== undefined && msg.id !== null && this.pending.has(msg.id)) {
      const p = this.pending.get(msg.id)!;
      this.pending.delete(msg.id);
      if (msg.error) {
        p.reject(new RpcCallError(msg.error.code, msg.error.message, msg.error.data));
      } else {
        p.resolve(msg.result);
      }
      return;
    }
    if (typeof msg.method === 'string') {
      const set = this.handlers.get(msg.method);
      if (set) for (const handler of [...set]) handler(msg.params);
    }
  }
}

/** Browser transport over a WebSocket that is already connecting. */
export class WebSocketTransport implements Transport {
  private messageHandler: ((text: string) => void) | null = null;
  private closeHandler: (() => void) | null = null;
  private queue: string[] = [];

  constructor(private readonly socket: WebSocket) {
    socket.addEventListener('open', () => {
      for (const text of this.queue.splice(0)) socket.send(text);
    });
    socket.addEventListener('message', (ev) => {
      if (typeof ev.data === 'string') this.messageHandler?.(ev.data);
    });
    socket.addEventListener('close', () => this.closeHandler?.());
  }

  send(text: string): void {
    if (this.socket.readyState === WebSocket.OPEN) this.socket.send(text);
    else this.queue.push(text);
  }

  onMessage(handler: (text: string) => void): void {
    this.messageHandler = handler;
  }

  onClose(handler: () => void): void {
    this.closeHandler = handler;
  }

  close(): void {
    this.socket.close();
  }
}

export function connect(url: string): RpcClient {
  return new RpcClient(new WebSocketTransport(new WebSocket(url)));
}
