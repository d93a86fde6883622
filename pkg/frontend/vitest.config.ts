import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // the round-trip file boots a real backend with a 250-site topology
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});
