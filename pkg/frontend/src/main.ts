import { createApi } from "./api.js";
import { mount } from "./controller.js";

const base = window.location.origin.replace(/\/$/, "");
mount(document, createApi(base));
