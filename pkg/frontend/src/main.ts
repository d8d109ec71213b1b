import { EngineClient } from "./api.js";
import { AlignController } from "./controller.js";
import { TimelineBoard } from "./render.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("engine") ?? "";

const client = new EngineClient(base);
const controller = new AlignController(client);
const root = document.getElementById("board");
if (!root) {
    throw new Error("missing #board element");
}
const board = new TimelineBoard(root, controller);

document.addEventListener("keydown", (ev) => {
    switch (ev.key) {
        case "ArrowRight":
            controller.cycle(1);
            break;
        case "ArrowLeft":
            controller.cycle(-1);
            break;
        case "Enter":
            void controller.acceptCurrent();
            break;
        case "Escape":
            void controller.rejectCurrent();
            break;
        case "+":
            board.zoom(1.25);
            break;
        case "-":
            board.zoom(0.8);
            break;
        default:
            return;
    }
    ev.preventDefault();
});

void controller.loadTimeline().then(() => board.loadStrips());
