import { ConsoleApp } from "./ui.js";

const baseUrl =
  new URLSearchParams(location.search).get("gateway") ?? location.origin;

const app = new ConsoleApp(document.getElementById("app")!, baseUrl);
app.start();
