import { defineConfig } from "vitest/config";

// The dev server proxies API calls to a locally running service
// (`crosstraj serve --port 8000`). Production builds are static files served
// by the service itself via `crosstraj serve --ui-dir frontend/dist`.
export default defineConfig({
    server: {
        proxy: {
            "/api": "http://localhost:8000",
        },
    },
    build: {
        outDir: "dist",
    },
    test: {
        environment: "jsdom",
        include: ["tests/**/*.test.ts"],
    },
});
