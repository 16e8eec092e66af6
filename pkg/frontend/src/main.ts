// Browser entry point. Query parameters pick the server and session:
//   index.html?server=ws://127.0.0.1:8765/rpc&session=<id>&toolchain=minivis
// Reloading with a session id rebuilds the entire view from the server.

import { App } from './app.js';
import { connect } from './rpc.js';

function wsUrl(): string {
  const q = new URLSearchParams(location.search);
  const given = q.get('server');
  if (given) return given;
  const scheme = location.protocol === 'https:' ? 'wss' : 'ws';
  return `${scheme}://${location.host}/rpc`;
}

async function start(): Promise<void> {
  const q = new URLSearchParams(location.search);
  const client = connect(wsUrl());
  const app = await App.boot({
    client,
    root: document.getElementById('app') ?? document.body,
    sessionId: q.get('session') ?? undefined,
    toolchainId: q.get('toolchain') ?? 'minivis',
  });
  // pin the session into the URL so a reload resumes instead of reopening
  if (!q.get('session')) {
    q.set('session', app.sessionId);
    history.replaceState(null, '', `${location.pathname}?${q}`);
  }
}

start().catch((err) => {
  const note = document.createElement('pre');
  note.className = 'boot-error';
  note.textContent = String(err);
  document.body.append(note);
});
