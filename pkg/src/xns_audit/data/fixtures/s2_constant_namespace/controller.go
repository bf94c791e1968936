package controllers

import (
	"context"

	corev1 "k8s.io/api/core/v1"
	"k8s.io/apimachinery/pkg/types"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

const systemNamespace = "kube-system"

// AppReconciler reads platform settings from fixed system namespaces.
type AppReconciler struct {
	client.Client
}

// Reconcile uses hardcoded namespaces only.
func (r *AppReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	app := &App{}
	if err := r.Get(ctx, req.NamespacedName, app); err != nil {
		return ctrl.Result{}, err
	}

	cm := &corev1.ConfigMap{}
	cm.SetNamespace("kube-public")
	cm.SetName(app.Spec.ConfigName)
	if err := r.Get(ctx, client.ObjectKeyFromObject(cm), cm); err != nil {
		return ctrl.Result{}, err
	}

	secret := &corev1.Secret{}
	key := types.NamespacedName{Namespace: systemNamespace, Name: "registry-credentials"}
	if err := r.Get(ctx, key, secret); err != nil {
		return ctrl.Result{}, err
	}
	return ctrl.Result{}, nil
}
