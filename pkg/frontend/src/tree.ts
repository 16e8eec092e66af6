import type { BranchRow, GroupJson, TreePayload } from './protocol.js';
import { el, svgEl } from './dom.js';

export const ROW_HEIGHT = 44;
const LANE_WIDTH = 22;
const NODE_RADIUS = 6;
const GRAPH_PAD = 14;

export interface TreeHandlers {
  /** Node or result-image click; the argument is the revision to check out. */
  onSelect(revisionId: string): void;
  onExpand(groupId: string, expanded: boolean): void;
  onHoverImage(revisionId: string, anchor: HTMLElement): void;
  onUnhoverImage(): void;
  /** Fill the img asynchronously (image.get → data URL). */
  resolveImage(ref: string, img: HTMLImageElement): void;
}

export interface TreeOptions {
  /** Default shows the latest state at the bottom; flip for newest-first. */
  latestAtTop?: boolean;
}

// one vertical slot on the shared time axis
interface Slot {
  groupId: string;
  revisionId: string | null; // null for whole-group slots
  row: BranchRow | null;     // null for off-branch groups
  offBranch: boolean;
  memberCount: number;
}

function branchRowsByGroup(rows: BranchRow[]): Map<string, BranchRow[]> {
  const map = new Map<string, BranchRow[]>();
  for (const row of rows) {
    const gid = row.kind === 'group' ? row.id : row.groupId;
    const list = map.get(gid);
    if (list) list.push(row);
    else map.set(gid, [row]);
  }
  return map;
}

/**
 * Walk groups in commit order and give every displayed node a slot, so the
 * revision graph, scope hashes, and result images all align on one vertical
 * time axis. On-branch groups contribute their branch rows (one per member
 * when expanded); off-branch groups contribute a single node-only slot.
 */
function buildSlots(payload: TreePayload): Slot[] {
  const byGroup = branchRowsByGroup(payload.branch.rows);
  const slots: Slot[] = [];
  for (const group of payload.groups) {
    const rows = byGroup.get(group.id);
    if (rows) {
      for (const row of rows) {
        slots.push({
          groupId: group.id,
          revisionId: row.kind === 'revision' ? row.id : null,
          row,
          offBranch: false,
          memberCount: group.members.length,
        });
      }
    } else {
      slots.push({
        groupId: group.id,
        revisionId: group.members.length === 1 ? group.members[0] : null,
        row: null,
        offBranch: true,
        memberCount: group.members.length,
      });
    }
  }
  return slots;
}

/** Lane per group: the displayed branch runs straight, forks step right. */
function assignLanes(groups: GroupJson[], onBranch: Set<string>): Map<string, number> {
  const lanes = new Map<string, number>();
  const parentOf = new Map<string, string>();
  for (const group of groups) {
    for (const child of group.children) parentOf.set(child, group.id);
  }
  const offBranchKids = new Map<string, number>();
  for (const group of groups) {
    if (onBranch.has(group.id)) {
      lanes.set(group.id, 0);
      continue;
    }
    const parent = parentOf.get(group.id);
    const parentLane = parent !== undefined ? lanes.get(parent) ?? 0 : 0;
    const taken = offBranchKids.get(parent ?? '') ?? 0;
    offBranchKids.set(parent ?? '', taken + 1);
    lanes.set(group.id, parentLane + 1 + taken);
  }
  return lanes;
}

function nodeColor(slot: Slot, payload: TreePayload): string {
  const collapsed = payload.branch.collapsedGroups.includes(slot.groupId);
  if (collapsed && slot.memberCount > 1) return 'green';
  const rid = slot.revisionId ?? slot.groupId;
  return payload.branch.colors[rid] ?? 'grey';
}

/** The revision a click on this slot should check out. */
function selectTarget(slot: Slot): string {
  if (slot.revisionId !== null) return slot.revisionId;
  if (slot.row !== null && slot.row.kind === 'group') {
    return slot.row.members[slot.row.members.length - 1];
  }
  return slot.groupId;
}

function renderGraph(slots: Slot[], payload: TreePayload,
                     handlers: TreeHandlers): SVGElement {
  const onBranch = new Set(
    payload.branch.rows.map((r) => (r.kind === 'group' ? r.id : r.groupId)),
  );
  const lanes = assignLanes(payload.groups, onBranch);
  const firstSlot = new Map<string, number>();
  const lastSlot = new Map<string, number>();
  slots.forEach((slot, i) => {
    if (!firstSlot.has(slot.groupId)) firstSlot.set(slot.groupId, i);
    lastSlot.set(slot.groupId, i);
  });

  const laneCount = Math.max(0, ...lanes.values()) + 1;
  const width = GRAPH_PAD * 2 + laneCount * LANE_WIDTH;
  const height = slots.length * ROW_HEIGHT;
  const svg = svgEl('svg', {
    class: 'revision-graph',
    width: String(width),
    height: String(height),
    'data-lanes': String(laneCount),
  });

  const x = (gid: string) => GRAPH_PAD + (lanes.get(gid) ?? 0) * LANE_WIDTH;
  const y = (i: number) => i * ROW_HEIGHT + ROW_HEIGHT / 2;

  // edges first so nodes paint over them
  for (const group of payload.groups) {
    const gi = lastSlot.get(group.id);
    if (gi === undefined) continue;
    for (const child of group.children) {
      const ci = firstSlot.get(child);
      if (ci === undefined) continue;
      svg.append(svgEl('path', {
        class: 'edge',
        d: `M${x(group.id)},${y(gi)} L${x(child)},${y(ci)}`,
      }));
    }
    const first = firstSlot.get(group.id)!;
    if (first !== gi) { // expanded run: straight line through the members
      svg.append(svgEl('path', {
        class: 'edge',
        d: `M${x(group.id)},${y(first)} L${x(group.id)},${y(gi)}`,
      }));
    }
  }

  slots.forEach((slot, i) => {
    const color = nodeColor(slot, payload);
    const node = svgEl('circle', {
      class: `node ${color}`,
      cx: String(x(slot.groupId)),
      cy: String(y(i)),
      r: String(NODE_RADIUS),
      'data-group': slot.groupId,
    });
    if (slot.revisionId !== null) node.setAttribute('data-rev', slot.revisionId);
    const target = selectTarget(slot);
    if (target === payload.branch.current) node.classList.add('current');
    if (slot.offBranch && slot.memberCount > 1) {
      node.setAttribute('data-members', String(slot.memberCount));
    }
    node.addEventListener('click', () => handlers.onSelect(target));
    svg.append(node);
  });
  return svg;
}

function resultImage(ref: string, revisionId: string, sstHash: string,
                     handlers: TreeHandlers): HTMLImageElement {
  const img = el('img', {
    class: 'result',
    'data-ref': ref,
    'data-rev': revisionId,
    'data-ssthash': sstHash,
    alt: revisionId.slice(0, 8),
  });
  img.addEventListener('click', () => handlers.onSelect(revisionId));
  img.addEventListener('mouseenter', () => {
    img.classList.add('enlarged');
    handlers.onHoverImage(revisionId, img);
  });
  img.addEventListener('mouseleave', () => {
    img.classList.remove('enlarged');
    handlers.onUnhoverImage();
  });
  handlers.resolveImage(ref, img);
  return img;
}

function renderRowCells(slot: Slot, payload: TreePayload,
                        handlers: TreeHandlers): HTMLElement {
  const rowEl = el('div', { class: 'metarow', 'data-group': slot.groupId });
  rowEl.style.height = `${ROW_HEIGHT}px`;
  if (slot.row === null) {
    rowEl.classList.add('off-branch');
    if (slot.memberCount > 1) {
      rowEl.append(el('span', { class: 'member-count' }, `×${slot.memberCount}`));
    }
    return rowEl;
  }

  const row = slot.row;
  const sst = el('span', { class: 'sst', 'data-ssthash': row.sstHash }, row.sstHash);
  sst.addEventListener('mouseenter', () => highlightSst(rowEl, row.sstHash, true));
  sst.addEventListener('mouseleave', () => highlightSst(rowEl, row.sstHash, false));

  const strip = el('div', { class: 'result-strip' });
  if (row.kind === 'group') {
    for (let i = 0; i < row.members.length; i++) {
      strip.append(resultImage(row.imageRefs[i], row.members[i], row.sstHash, handlers));
    }
    if (row.varianceRef !== null) {
      const vimg = el('img', {
        class: 'variance',
        'data-ref': row.varianceRef,
        'data-group': row.id,
        alt: 'variance',
      });
      vimg.addEventListener('mouseenter', () => highlightGroup(strip, true));
      vimg.addEventListener('mouseleave', () => highlightGroup(strip, false));
      handlers.resolveImage(row.varianceRef, vimg);
      strip.append(vimg);
    }
    const toggle = el('button', { class: 'expand-toggle' }, '+');
    toggle.addEventListener('click', () => handlers.onExpand(row.id, true));
    rowEl.append(toggle);
  } else {
    strip.append(resultImage(row.imageRef, row.id, row.sstHash, handlers));
    if (slot.memberCount > 1 && payload.branch.collapsedGroups.indexOf(row.groupId) < 0) {
      // expanded bundle: offer collapse on each member row
      const toggle = el('button', { class: 'expand-toggle' }, '−');
      toggle.addEventListener('click', () => handlers.onExpand(row.groupId, false));
      rowEl.append(toggle);
    }
  }
  rowEl.append(sst, strip);
  return rowEl;
}

function highlightSst(scope: HTMLElement, hash: string, on: boolean): void {
  const pane = scope.closest('.metavis');
  if (!pane) return;
  for (const img of pane.querySelectorAll(`img.result[data-ssthash="${hash}"]`)) {
    img.classList.toggle('highlight', on);
  }
}

function highlightGroup(strip: HTMLElement, on: boolean): void {
  for (const img of strip.querySelectorAll('img.result')) {
    img.classList.toggle('highlight', on);
  }
}

/**
 * The meta visualization: revision graph, scope hashes, result strip, and
 * variance thumbnails, one shared time axis. Pure DOM construction; all
 * protocol traffic goes through the handlers.
 */
export function renderMetaVis(payload: TreePayload, handlers: TreeHandlers,
                              opts: TreeOptions = {}): HTMLElement {
  const pane = el('div', { class: 'metavis' });
  if (payload.branch.head === null || payload.groups.length === 0) {
    pane.classList.add('empty');
    pane.append(el('div', { class: 'empty-note' }, 'no revisions yet'));
    return pane;
  }

  let slots = buildSlots(payload);
  if (opts.latestAtTop) slots = [...slots].reverse();

  pane.append(renderGraph(slots, payload, handlers));
  const rows = el('div', { class: 'metarows' });
  for (const slot of slots) rows.append(renderRowCells(slot, payload, handlers));
  pane.append(rows);
  return pane;
}
