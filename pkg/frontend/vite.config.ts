/// <reference types="vitest/config" />
import { defineConfig } from "vite";

export default defineConfig({
  build: {
    outDir: "dist",
  },
  test: {
    environment: "jsdom",
  },
});
