import { ChatApp } from "./app";
import "./style.css";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");
new ChatApp(root);
