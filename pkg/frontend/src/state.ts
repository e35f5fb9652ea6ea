// Everything needed to restore a session lives in the URL hash, so reloading
// (or sharing a link) lands on the same project, core type, and selections.

export type TabId = "cells" | "tree" | "paths" | "trajectories" | "genes";

export const TAB_IDS: readonly TabId[] = ["cells", "tree", "paths", "trajectories", "genes"];

export const TAB_LABELS: Record<TabId, string> = {
    cells: "Core cells",
    tree: "Path selection",
    paths: "Path inspection",
    trajectories: "Trajectories",
    genes: "Gene functions",
};

export interface ViewState {
    project: string | null;
    core: string | null;
    minFreq: number;
    /** Validated type sequences, in the order they were accepted. */
    sequences: string[][];
    path: string | null;
    trajectory: string | null;
    /** Open tabs in opening order. */
    tabs: TabId[];
    /** Active tab; always a member of `tabs`. */
    tab: TabId;
}

export function defaultViewState(): ViewState {
    return {
        project: null,
        core: null,
        minFreq: 0,
        sequences: [],
        path: null,
        trajectory: null,
        tabs: ["cells"],
        tab: "cells",
    };
}

// Cell type names can contain the separator characters themselves, so each
// type is percent-encoded before joining; URLSearchParams then escapes the
// whole value once more, which round-trips cleanly.
const TYPE_SEP = ">";
const LIST_SEP = ",";

function encodeSequences(sequences: string[][]): string {
    return sequences
        .map((seq) => seq.map(encodeURIComponent).join(TYPE_SEP))
        .join(LIST_SEP);
}

function decodeSequences(text: string): string[][] {
    return text
        .split(LIST_SEP)
        .filter((part) => part.length > 0)
        .map((part) => part.split(TYPE_SEP).map(decodeURIComponent))
        .filter((seq) => seq.length > 0);
}

function isTabId(value: string): value is TabId {
    return (TAB_IDS as readonly string[]).includes(value);
}

export function encodeViewState(state: ViewState): string {
    const params = new URLSearchParams();
    if (state.project) params.set("project", state.project);
    if (state.core) params.set("core", state.core);
    if (state.minFreq > 0) params.set("min_freq", String(state.minFreq));
    if (state.sequences.length) params.set("sequences", encodeSequences(state.sequences));
    if (state.path) params.set("path", state.path);
    if (state.trajectory) params.set("trajectory", state.trajectory);
    if (state.tabs.length !== 1 || state.tabs[0] !== "cells") {
        params.set("tabs", state.tabs.join(LIST_SEP));
    }
    if (state.tab !== "cells") params.set("tab", state.tab);
    return params.toString();
}

export function decodeViewState(hash: string): ViewState {
    const state = defaultViewState();
    const text = hash.startsWith("#") ? hash.slice(1) : hash;
    if (!text) return state;
    const params = new URLSearchParams(text);

    state.project = params.get("project");
    state.core = params.get("core");
    const minFreq = Number.parseInt(params.get("min_freq") ?? "", 10);
    if (Number.isFinite(minFreq) && minFreq > 0) state.minFreq = minFreq;
    const sequences = params.get("sequences");
    if (sequences) state.sequences = decodeSequences(sequences);
    state.path = params.get("path");
    state.trajectory = params.get("trajectory");

    const tabs = (params.get("tabs") ?? "").split(LIST_SEP).filter(isTabId);
    if (tabs.length) state.tabs = tabs;
    const tab = params.get("tab") ?? "";
    if (isTabId(tab) && state.tabs.includes(tab)) state.tab = tab;
    else if (state.tabs.includes("cells")) state.tab = "cells";
    else state.tab = state.tabs[state.tabs.length - 1];
    return state;
}

export function readViewState(): ViewState {
    return decodeViewState(window.location.hash);
}

export function writeViewState(state: ViewState): void {
    const encoded = encodeViewState(state);
    // replaceState keeps back/forward for page navigation, not per-click.
    history.replaceState(null, "", encoded ? `#${encoded}` : window.location.pathname);
}
