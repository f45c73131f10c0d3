import { ApiClient } from "./api.js";
import { createApp } from "./app.js";

const mount = document.getElementById("app");
if (mount) {
  // Same-origin by default; override with ?api=http://host:port during dev.
  const params = new URLSearchParams(window.location.search);
  const api = new ApiClient(params.get("api") ?? "");
  createApp(document, api, mount);
}
