import { defineConfig } from "vitest/config";

export default defineConfig({
  // served by the annotation service under /ui
  base: "/ui/",
  build: {
    outDir: "dist",
    emptyOutDir: true,
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
