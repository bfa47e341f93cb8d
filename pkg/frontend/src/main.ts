import { EditorApp } from "./editor.js";

const app = new EditorApp(document);
app.mount();
