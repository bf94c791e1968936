package controllers

import (
	"context"

	metav1 "k8s.io/apimachinery/pkg/apis/meta/v1"
	"k8s.io/client-go/kubernetes"
	ctrl "sigs.k8s.io/controller-runtime"
	"sigs.k8s.io/controller-runtime/pkg/client"
)

// AppReconciler reconciles App objects with a typed clientset for core resources.
type AppReconciler struct {
	client.Client
	Clientset kubernetes.Interface
}

// Reconcile checks that the referenced Secret exists.
func (r *AppReconciler) Reconcile(ctx context.Context, req ctrl.Request) (ctrl.Result, error) {
	app := &App{}
	if err := r.Get(ctx, req.NamespacedName, app); err != nil {
		return ctrl.Result{}, err
	}

	secrets := r.Clientset.CoreV1().Secrets(app.Spec.SecretNamespace)
	secret, err := secrets.Get(ctx, app.Spec.SecretName, metav1.GetOptions{})
	if err != nil {
		return ctrl.Result{}, err
	}

	app.Status.Ready = len(secret.Data) > 0
	return ctrl.Result{}, r.Status().Update(ctx, app)
}
