// Inline progress indicator shown while a queued server job (summarize,
// enrichment, ...) is still running.

export function renderJobProgress(
    container: HTMLElement,
    label: string,
    progress: number
): void {
    const pct = Math.round(Math.min(1, Math.max(0, progress)) * 100);
    container.replaceChildren();

    const wrap = document.createElement("div");
    wrap.className = "job-progress";

    const text = document.createElement("div");
    text.className = "job-progress-label";
    text.textContent = `${label} — ${pct}%`;
    wrap.appendChild(text);

    const track = document.createElement("div");
    track.className = "progress-track";
    const fill = document.createElement("div");
    fill.className = "progress-fill";
    fill.style.width = `${pct}%`;
    track.appendChild(fill);
    wrap.appendChild(track);

    container.appendChild(wrap);
}
