import { defineConfig } from "vitest/config";

// Served by the crossmap API at /ui/, so assets must resolve under that base.
export default defineConfig({
  base: "/ui/",
  build: { outDir: "dist" },
  server: {
    proxy: { "/api": "http://127.0.0.1:8000" },
  },
  test: {
    environment: "happy-dom",
    testTimeout: 30000,
    hookTimeout: 240000,
  },
});
