import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    include: ["tests/**/*.test.ts"],
    testTimeout: 120000,
    hookTimeout: 60000,
    // the e2e suite spawns one service; keep files sequential
    fileParallelism: false,
  },
});
