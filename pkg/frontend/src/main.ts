import { Dashboard } from "./dashboard.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");

const params = new URLSearchParams(location.search);
const pollMs = Number(params.get("poll") ?? "") || 2000;

const dashboard = new Dashboard(root, { pollMs });
dashboard.mount();
void dashboard.refreshDaily();
void dashboard.refreshLive();
dashboard.start();
