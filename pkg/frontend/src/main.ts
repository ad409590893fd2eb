import { mountApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const service = params.get("service") ?? "http://127.0.0.1:8765";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

mountApp(root, service).catch((err) => {
  root.textContent = `cannot reach the service at ${service}: ${err}`;
});
