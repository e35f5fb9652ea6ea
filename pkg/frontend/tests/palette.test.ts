import { afterEach, describe, expect, it, vi } from "vitest";
import { colorFor, loadPalette, setPalette } from "../src/palette";

afterEach(() => {
    setPalette({});
    vi.unstubAllGlobals();
});

describe("cell type palette", () => {
    it("assigns a stable color independent of call order", () => {
        const first = colorFor("Chondrocyte");
        colorFor("Mesenchyme");
        colorFor("AER");
        expect(colorFor("Chondrocyte")).toBe(first);
        expect(first).toMatch(/^hsl\(\d+, 62%, 46%\)$/);
    });

    it("separates the hues of different type names", () => {
        expect(colorFor("Chondrocyte")).not.toBe(colorFor("Mesenchyme"));
        expect(colorFor("AER")).not.toBe(colorFor("Perichondrium"));
    });

    it("prefers an explicit palette entry over the hash fallback", () => {
        setPalette({ Mesenchyme: "#336699" });
        expect(colorFor("Mesenchyme")).toBe("#336699");
        expect(colorFor("Chondrocyte")).toMatch(/^hsl\(/);
    });

    it("loads a palette file from next to the bundle", async () => {
        vi.stubGlobal("fetch", async () => ({
            ok: true,
            json: async () => ({ AER: "#abcdef" }),
        }));
        const palette = await loadPalette();
        expect(palette).toEqual({ AER: "#abcdef" });
        expect(colorFor("AER")).toBe("#abcdef");
    });

    it("falls back silently when no palette file ships", async () => {
        vi.stubGlobal("fetch", async () => ({ ok: false, status: 404 }));
        expect(await loadPalette()).toBeNull();
        expect(colorFor("AER")).toMatch(/^hsl\(/);
    });
});
