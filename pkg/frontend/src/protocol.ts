// Wire types for the session protocol (JSON-RPC 2.0). Field names mirror the
// server exactly; nothing here is client-invented state.

export type RpcId = number | string;

export interface RpcRequest {
  jsonrpc: '2.0';
  id?: RpcId;
  method: string;
  params?: unknown;
}

export interface RpcError {
  code: number;
  message: string;
  data?: unknown;
}

export interface RpcResponse {
  jsonrpc: '2.0';
  id: RpcId | null;
  result?: unknown;
  error?: RpcError;
}

// server-assigned error codes
export const ERR_UNKNOWN_TOOLCHAIN = -32001;
export const ERR_UNKNOWN_SESSION = -32002;
export const ERR_UNKNOWN_REVISION = -32003;
export const ERR_TYPE_MISMATCH = -32004;
export const ERR_UNKNOWN_IMAGE = -32005;
export const ERR_UNKNOWN_GROUP = -32006;

export interface Diagnostic {
  file: string;
  line: number;
  col: number;
  message: string;
}

export interface GroupJson {
  id: string;
  members: string[];
  sstHash: string;
  children: string[];
  collapsed: boolean;
}

/** One collapsed bundle on the branch: several images side by side. */
export interface GroupRow {
  kind: 'group';
  id: string;
  members: string[];
  imageRefs: string[];
  sstHash: string;
  varianceRef: string | null;
  collapsed: true;
}

export interface RevisionRow {
  kind: 'revision';
  id: string;
  groupId: string;
  imageRef: string;
  sstHash: string;
}

export type BranchRow = GroupRow | RevisionRow;

export interface BranchView {
  head: string | null;
  rows: BranchRow[];
  current: string | null;
  colors: Record<string, 'blue' | 'grey'>;
  collapsedGroups: string[];
}

export interface TreePayload {
  groups: GroupJson[];
  branch: BranchView;
}

export type DiffOp = ['keep' | 'remove' | 'add', string];

export interface DiffHunk {
  fromStart: number;
  fromLen: number;
  toStart: number;
  toLen: number;
  ops: DiffOp[];
}

export interface FileDiff {
  path: string;
  status: 'modified' | 'added' | 'deleted' | 'unchanged';
  fromTrailingNewline: boolean;
  toTrailingNewline: boolean;
  hunks: DiffHunk[];
}

// method results

export interface OpenResult { sessionId: string }
export interface OkResult { ok: boolean }
export interface CheckoutResult { files: Record<string, string> }
export interface DiffResult { diffs: FileDiff[] }
export interface SetParamsResult { generation: number }
export interface ImageResult { ref: string; png: string }

// notification payloads

export interface CompileSucceeded { sessionId: string; revisionId: string }
export interface CompileFailed { sessionId: string; diagnostics: Diagnostic[] }
export interface ImageReady {
  sessionId: string;
  revisionId: string;
  ref: string;
  paramGen: number;
}
export interface TreeChanged { sessionId: string }

export type ParamValue = number | [number, number, number];

// camera parameters are ordinary params under reserved names
export const CAMERA_EYE = 'cam_eye';
export const CAMERA_AT = 'cam_at';
export const CAMERA_UP = 'cam_up';
