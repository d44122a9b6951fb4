import { defineConfig } from "vitest/config";

// Every test shells out to the Python CLI, so the default 5s budget is
// far too tight.
export default defineConfig({
  test: {
    testTimeout: 180_000,
    hookTimeout: 60_000,
  },
});
