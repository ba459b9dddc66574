import { ApiClient } from "./api.js";
import { AnnotationApp } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
const api = new ApiClient("", (url, init) => window.fetch(url, init));
new AnnotationApp(root, api, document).start();
