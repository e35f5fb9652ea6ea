// Cell types keep one color across every view. Datasets that define a
// standard color encoding can ship a palette file (type name -> CSS color)
// next to the UI bundle; anything not covered falls back to a stable hash of
// the type name, so colors never depend on payload order or fetch timing.

export type Palette = Record<string, string>;

let datasetPalette: Palette | null = null;

export function setPalette(palette: Palette | null): void {
    datasetPalette = palette;
}

export async function loadPalette(url = "palette.json"): Promise<Palette | null> {
    try {
        const resp = await fetch(url);
        if (!resp.ok) return null;
        const body = await resp.json();
        if (typeof body !== "object" || body === null || Array.isArray(body)) return null;
        const palette: Palette = {};
        for (const [key, value] of Object.entries(body)) {
            if (typeof value === "string") palette[key] = value;
        }
        setPalette(palette);
        return palette;
    } catch {
        return null;
    }
}

// FNV-1a, folded onto the hue circle.
function hashHue(name: string): number {
    let h = 0x811c9dc5;
    for (let i = 0; i < name.length; i++) {
        h ^= name.charCodeAt(i);
        h = Math.imul(h, 0x01000193);
    }
    return (h >>> 0) % 360;
}

export function colorFor(cellType: string): string {
    if (datasetPalette && cellType in datasetPalette) return datasetPalette[cellType];
    return `hsl(${hashHue(cellType)}, 62%, 46%)`;
}
